"""Miniature versions of the package's benchmark tables.

Small replicate counts so the whole script stays around a minute; the
acceptance suite runs the full-scale versions.  Writes CSV tables next to
this script.
"""

import csv
import pathlib

import evofactor as ef
from evofactor.pipelines import estimation_pipeline, static_test_pipeline

OUT = pathlib.Path(__file__).resolve().parent

print("== estimation benchmark (drifting loadings): RMSE and span angle ==")
rows = []
for n, p in ((500, 20), (500, 40)):
    spec = ef.SimulationSpec(design="tv-loading", n=n, p=p, seed=3, replicates=5)
    rep = ef.monte_carlo(spec, estimation_pipeline(j_grid=tuple(range(1, 6))))
    m = rep.metrics
    rows.append({
        "n": n, "p": p,
        "rmse_sieve": round(m["rmse_sieve"].mean, 4),
        "rmse_local": round(m["rmse_local"].mean, 4),
        "rmse_static": round(m["rmse_static"].mean, 4),
        "angle_sieve": round(m["angle_sieve"].mean, 4),
        "angle_local": round(m["angle_local"].mean, 4),
        "angle_static": round(m["angle_static"].mean, 4),
    })
    print(f"  n={n} p={p}: " + ", ".join(f"{k}={v}" for k, v in rows[-1].items() if k not in ("n", "p")))

with open(OUT / "table_estimation_small.csv", "w", newline="\n") as fh:
    writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
    writer.writeheader()
    writer.writerows(rows)

print("\n== test benchmark: size under the null, power under drift ==")
rows = []
for design, dev in (("null-model2", None), ("power", 0.0), ("power", 0.4)):
    spec = ef.SimulationSpec(
        design=design, n=600, p=10, seed=5, replicates=10, deviation=dev
    )
    rep = ef.monte_carlo(spec, static_test_pipeline(n_boot=300, block_grid=(2, 3, 4, 5, 6)))
    m = rep.metrics
    label = design if dev is None else f"{design}(D={dev})"
    rows.append({
        "scenario": label,
        "reject_5": round(m["reject_5"].mean, 3),
        "reject_10": round(m["reject_10"].mean, 3),
        "mean_p": round(m["p_value"].mean, 3),
    })
    print(f"  {label:18s}: reject@5%={rows[-1]['reject_5']}, reject@10%={rows[-1]['reject_10']}")

with open(OUT / "table_test_small.csv", "w", newline="\n") as fh:
    writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
    writer.writeheader()
    writer.writerows(rows)

print(f"\nwrote {OUT / 'table_estimation_small.csv'} and {OUT / 'table_test_small.csv'}")
