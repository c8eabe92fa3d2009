"""Probe the correlated-bit tail bound on random bit distributions.

For every family member whose pairwise correlations exceed eta and whose
single-bit rates sit in the allowed window, the chance that more than s*n/2
bits fire should exceed s*eta/4. The sweep reports the smallest margin found.
"""
from noisyqc import runner

for mode, s in (("pearson", 0.2), ("covariance", 0.17)):
    rec = runner.run_scenario({"scenario": "cor2q_sweep", "seed": 11,
                               "params": {"n": 8, "random_count": 3000, "mode": mode, "s": s}})
    p = rec["payload"]
    print(f"{mode:<10} checked {p['checked']:>5}, filtered {p['skipped']:>5}, "
          f"violations {p['violation_count']}, min margin {p['min_margin']:.3e}")
