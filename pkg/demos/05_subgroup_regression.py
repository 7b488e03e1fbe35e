"""Why discovered subgroups improve downstream regression.

The synthetic response mixes a different coefficient vector per group, so
one pooled regression blends them all. Fitting each discovered subgroup
separately recovers coefficient directions far closer to each group's
truth; the table mirrors the benchmark's cosine comparison.
"""

from phnmf.experiments import regression_experiment

rows = regression_experiment("continuous", master_seed=11)

header = f"{'group':6s} {'subgroup vs truth':>18s} {'subgroup vs pooled':>19s} {'pooled vs truth':>16s}"
print(header)
print("-" * len(header))
for row in rows:
    print(
        f"{row['group']:6s} {row['subgroup_vs_truth']:18.4f} "
        f"{row['subgroup_vs_population']:19.4f} {row['population_vs_truth']:16.4f}"
    )

wins = sum(1 for r in rows if r["subgroup_vs_truth"] > r["population_vs_truth"])
print(f"\nsubgroup fit closer to the truth than the pooled fit: {wins}/8 groups")
