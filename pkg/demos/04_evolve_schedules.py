"""Evolving visit schedules that beat every round-robin baseline.

Program trees print vectors of reals; each value is folded into (0,1) and
decoded into a time slot inside the request's window.  A steady-state
tournament loop then breeds trees whose decoded schedules send fewer
people to intensive care.  The improvement trail of each independent run
is kept, merged and reduced to a Pareto front over (deaths, ICU cases).
"""

import shutil
import tempfile

from lockdownsched import (
    GpConfig,
    fitness_value,
    generate_dataset,
    round_robin,
    run_experiment,
    run_pirs,
    simulate,
)
from lockdownsched.experiment import ExperimentSpec

SEED = 12345
PRIORS = {20: 0.01, 40: 0.03, 50: 0.02}

ds = generate_dataset(seed=SEED).with_taxonomy(PRIORS)
comp3 = simulate(ds, round_robin(ds, "comp3"), "partial", s=4)
print(f"round-robin comp3 baseline: N_H={comp3.counts()[0]}, N_D={comp3.counts()[1]}, "
      f"cost={-fitness_value(*comp3.counts()):.2f}")

print()
print("Evolving (fractional model, s=4, 3 runs x 20k offspring)...")
config = GpConfig(model="partial", s=4, population=500, budget=20_000)
archive = run_pirs(ds, config, seeds=(1, 2, 3))
print(f"  improvements recorded: {len(archive.records)}")
best = archive.records[0]
print(f"  best: N_H={best.n_h}, N_D={best.n_d}, cost={-best.fitness:.2f} "
      f"(run {best.pir_id}, vector of {len(best.vector)} reals)")
print("  Pareto front over (N_D, N_H):")
for rec in archive.pareto:
    print(f"    N_D={rec.n_d:2d}  N_H={rec.n_h:2d}  cost={-rec.fitness:.2f}")

ratio = -fitness_value(*comp3.counts()) / -best.fitness
print(f"  the evolved schedule is {ratio:.1f}x cheaper than comp3")

print()
print("The experiment layer wraps all of this into a replayable report:")
out = tempfile.mkdtemp(prefix="lockdownsched-demo-")
spec = ExperimentSpec(
    model="partial", generate_seed=SEED, s=4, priors=dict(PRIORS),
    pir_seeds=(1,), population=200, budget=5_000,
)
summary = run_experiment(spec, out)
print(f"  wrote {out}: baselines.csv, archive.csv, pareto.csv, solutions/,")
print(f"  manifest.json (digest {summary['dataset_digest'][:12]}..., replayable)")
shutil.rmtree(out)
