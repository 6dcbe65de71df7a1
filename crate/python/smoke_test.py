"""Smoke test for the welfare_lab extension module."""

import json
from pathlib import Path

import welfare_lab

ROOT = Path(__file__).resolve().parent.parent


def main():
    market = welfare_lab.Market.from_json((ROOT / "instances" / "minimal.json").read_text())
    assert (market.n, market.m) == (1, 2)
    assert market.value(0, [0, 1]) == 3.0
    assert market.demand(0, [-1.0, 2.5]) == ([0], 2.0)

    for algo in ("greedy", "kc", "additive", "brute", "lp"):
        w, _ = welfare_lab.solve(market, algo)
        assert abs(w - 3.0) < 1e-6, (algo, w)

    coverage = welfare_lab.Market.from_json((ROOT / "instances" / "murota_coverage_eps0.1.json").read_text())
    flags = json.loads(coverage.check())
    assert all(p["submodular"] for p in flags)
    assert not all(p["gross_substitutes"] for p in flags)

    report = json.loads(welfare_lab.repro("murota-negative-cycles"))
    assert report["pass"], report

    try:
        welfare_lab.Market.from_json('{"m": 2, "players": [{"kind": "bogus"}]}')
    except ValueError as e:
        assert "bogus" in str(e)
    else:
        raise AssertionError("bad kind accepted")

    print("smoke test passed:", len(welfare_lab.REPRO_IDS), "reproductions available")


if __name__ == "__main__":
    main()
