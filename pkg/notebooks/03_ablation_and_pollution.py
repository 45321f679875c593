"""
Ablation and pollution
======================

What the learned generator buys over noise alone, and over decoding raw
wide-Gaussian codes. Then the same run with 1% of the training data swapped
for anomalies. Two seeds per arm to keep it short; the acceptance suite
uses five.
"""

# %%
from da3d import PollutionSpec, TrainConfig, pollute, run_experiment, synth_task

task = synth_task("blobs2d", seed=0)
cfg = TrainConfig(seed=42, batch_size=128, epochs_pretrain=20, epochs_main=40)

# %%
results = {}
for mode in ("da3d", "trivial_only", "simple_gen"):
    reports, mean, std = run_experiment(task, cfg, mode, n_runs=2)
    results[mode] = mean
    print(f"{mode:>12}: {mean:.3f} +- {std:.3f}   ", [round(r.auc, 3) for r in reports])

# %%
polluted = pollute(task, PollutionSpec(0.01, seed=0))
print("anomalies hidden in train:", int(polluted.part_labels("train").sum()))
_, mean, std = run_experiment(polluted, cfg, "da3d", n_runs=2)
print(f"polluted da3d: {mean:.3f} +- {std:.3f} (clean {results['da3d']:.3f})")
