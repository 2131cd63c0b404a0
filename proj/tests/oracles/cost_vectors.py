"""Exact-rational reference values for the cost tests.

Run: python3 cost_vectors.py
"""
from fractions import Fraction as F

MB_PER_REQ = F("0.00296")
PRICE_PER_M = F("0.20")
FREE_REQ = F(1_000_000)
GBS_PRICE = F("0.0000166667")
FREE_GBS = F(400_000)
VPS_MONTH = F("3.14")
VPS_HOUR = F("0.004")
SPOT_HOUR = F("0.0383")


def cents(x):
    # half away from zero
    return F(int((x * 100) + F(1, 2)), 100)


def requests(gb):
    return F(gb) * 1024 / MB_PER_REQ


def monthly(gb, ms=1000, mem=128):
    r = requests(gb)
    req_cost = max(F(0), r - FREE_REQ) * PRICE_PER_M / 10**6
    gbs = r * F(mem) / 1024 * F(ms) / 1000
    comp = max(F(0), gbs - FREE_GBS) * GBS_PRICE
    return r, req_cost, gbs, comp


r, rc, gbs, comp = monthly("6.76")
print("requests(6.76)", float(r))
print("request_cost", float(rc), "gb_seconds", float(gbs), "compute", float(comp))
vanilla = cents(rc + comp)
print("vanilla", float(vanilla), "private", float(cents(vanilla + VPS_MONTH)))
base = vanilla * F("34.4")
print("baseline", float(base), "cents", float(cents(base)))
print("ratio vanilla", float(base / vanilla), "ratio private", float(base / (vanilla + VPS_MONTH)))
print("private 2 vps", float(cents(vanilla + 2 * VPS_MONTH)))

# Larger traffic where compute leaves the free tier.
r, rc, gbs, comp = monthly(20)
print("20GB requests", float(r), "req", float(rc), "gbs", float(gbs), "compute", float(comp),
      "total", float(cents(rc + comp)))

for n in (0, 25, 300):
    req = F(n * 3600)
    c = max(F(0), req - FREE_REQ / 30) * PRICE_PER_M / 10**6
    print("daily", n, float(c), float(c + VPS_HOUR * 24), float(n * SPOT_HOUR))

for h in (0, 6, 24):
    c = max(F(0), F(86400) - FREE_REQ / 30) * PRICE_PER_M / 10**6 + VPS_HOUR * h
    print("security", h, float(c))
