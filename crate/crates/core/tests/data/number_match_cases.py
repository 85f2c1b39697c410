#!/usr/bin/env python3
"""Derives expected Number Match outcomes for number_match_cases.csv.

Rule: take the first number in the answer (currency symbols and percent
signs removed, thousands commas allowed, "(x)" negative, UNANSWERABLE means
no number). The answer matches when some scale s in SCALES satisfies
|s * pred - gold| <= EPS * |gold|.

Run from this directory: python3 number_match_cases.py > number_match_cases.csv
"""

import csv
import re
import sys
from fractions import Fraction

EPS = Fraction(1, 100)
SCALES = [Fraction(1, 100), Fraction(1), Fraction(100), Fraction(1000), Fraction(10**6),
          Fraction(10**9), Fraction(1, 1000), Fraction(1, 10**6), Fraction(1, 10**9)]

NUM = re.compile(r"(\(\s*)?([-+−])?(\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?|\.\d+)(\s*\))?")

CASES = [
    ("$1,234.5", "1234.5"),
    ("(250)", "-250"),
    ("12.3%", "0.123"),
    ("3.2 million", "3200000"),
    ("0.5", "50"),
    ("1.5", "1.52"),
    ("99.1", "100"),
    ("98.9", "100"),
    ("The answer is 7 and 8", "8"),
    ("-4.5", "4.5"),
    ("−4.5", "-4.5"),
    ("€2,000", "2"),
    ("no numbers here", "5"),
    ("UNANSWERABLE", "0.5"),
    ("1,000,000", "1000000"),
    ("45 %", "45"),
    ("0.0415", "4.15"),
    ("312", "0.312"),
    ("7.77", "7.7"),
    ("£(1,200)", "-1200"),
    ("about 2.5 billion", "2500000000"),
    ("17", "1700.5"),
]


def extract(text):
    if "UNANSWERABLE" in text.upper():
        return None
    cleaned = "".join(c for c in text if c not in "$€£¥₹%")
    m = NUM.search(cleaned)
    if not m:
        return None
    value = Fraction(m.group(3).replace(",", ""))
    if m.group(2) in ("-", "−"):
        value = -value
    if m.group(1) and m.group(4):
        value = -abs(value)
    return value


def matches(answer, gold):
    pred = extract(answer)
    if pred is None:
        return 0
    gold = Fraction(gold)
    return int(any(abs(s * pred - gold) <= EPS * abs(gold) for s in SCALES))


def main():
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["answer", "gold", "expected"])
    for answer, gold in CASES:
        out.writerow([answer, gold, matches(answer, gold)])


if __name__ == "__main__":
    main()
