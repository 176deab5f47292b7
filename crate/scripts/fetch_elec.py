#!/usr/bin/env python3
"""Download the ElecNormNew electricity-pricing stream (45312 rows).

Writes data/elecNormNew.csv with the header

    date,day,period,nswprice,nswdemand,vicprice,vicdemand,transfer,class

and class values UP/DOWN. Uses only the standard library; tries several
public mirrors (OpenML dataset 151 in ARFF form, plus CSV mirrors).
"""

import csv
import hashlib
import io
import sys
import urllib.request
from pathlib import Path

EXPECTED_ROWS = 45312
COLUMNS = [
    "date",
    "day",
    "period",
    "nswprice",
    "nswdemand",
    "vicprice",
    "vicdemand",
    "transfer",
    "class",
]

SOURCES = [
    "https://api.openml.org/data/v1/download/2419/electricity.arff",
    "https://www.openml.org/data/download/2419/electricity.arff",
    "https://raw.githubusercontent.com/scikit-multiflow/streaming-datasets/master/elec.csv",
]


def parse_arff(text):
    rows = []
    in_data = False
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("%"):
            continue
        if in_data:
            rows.append(line.split(","))
        elif line.lower().startswith("@data"):
            in_data = True
    return rows


def parse_csv(text):
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if rows and not rows[0][0].replace(".", "").replace("-", "").isdigit():
        rows = rows[1:]  # drop header
    return rows


def normalise_label(value):
    value = value.strip().strip("'\"")
    if value in ("UP", "DOWN"):
        return value
    if value in ("0", "0.0", "b'DOWN'"):
        return "DOWN"
    if value in ("1", "1.0", "b'UP'"):
        return "UP"
    raise ValueError(f"unrecognised class value {value!r}")


def main():
    out = Path(__file__).resolve().parent.parent / "data" / "elecNormNew.csv"
    out.parent.mkdir(parents=True, exist_ok=True)

    last_error = None
    for url in SOURCES:
        try:
            print(f"trying {url} ...")
            with urllib.request.urlopen(url, timeout=120) as response:
                text = response.read().decode("utf-8", errors="replace")
        except Exception as e:  # noqa: BLE001 - report and move on
            last_error = e
            print(f"  failed: {e}")
            continue

        rows = parse_arff(text) if "@data" in text.lower() else parse_csv(text)
        rows = [r for r in rows if len(r) == len(COLUMNS)]
        if len(rows) != EXPECTED_ROWS:
            last_error = ValueError(f"{url}: got {len(rows)} rows, expected {EXPECTED_ROWS}")
            print(f"  {last_error}")
            continue

        with out.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(COLUMNS)
            for row in rows:
                features = [field.strip().strip("'\"") for field in row[:-1]]
                writer.writerow(features + [normalise_label(row[-1])])

        digest = hashlib.sha256(out.read_bytes()).hexdigest()
        print(f"wrote {out} ({EXPECTED_ROWS} rows), sha256 {digest}")
        return 0

    print(f"all sources failed; last error: {last_error}", file=sys.stderr)
    print(
        "If you have the file already, set RAMOL_ELEC_CSV to its path or "
        "copy it to data/elecNormNew.csv.",
        file=sys.stderr,
    )
    return 1


if __name__ == "__main__":
    sys.exit(main())
