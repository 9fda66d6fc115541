"""
Driving the CLI end to end
==========================

Exercises the four subcommands — gen, train, eval, compare — the same
way a shell user would, via the `main` entry point. Everything happens
in a temporary directory; the script prints the artifacts it produced.
"""

import os
import tempfile

from cmdp_ppo.cli import main

workdir = tempfile.mkdtemp(prefix="cmdp-demo-")
print("working in", workdir)


def path(name):
    return os.path.join(workdir, name)


# 1. Describe a synthetic dataset in a small spec file and generate it.
with open(path("blobs.spec"), "w") as fh:
    fh.write("""\
n_features=2
counts=950,50
seed=1
mean_0=-1,-1
std_0=1,1
mean_1=1,1
std_1=1,1
""")
main(["gen", "--spec", path("blobs.spec"), "--out", path("blobs.csv")])

# 2. Train model 2 with a short run config. Any PpoConfig field can be
#    set here; unset keys fall back to the defaults.
with open(path("run.cfg"), "w") as fh:
    fh.write(f"""\
data={path('blobs.csv')}
label_column=label
model=2
epochs=15
batch_size=64
steps_per_rollout=64
memory_capacity=640
""")
main(["train", "--config", path("run.cfg"), "--out", path("run")])
print("train artifacts:", sorted(os.listdir(path("run"))))

# 3. Re-evaluate the saved actor on the full CSV using the stored
#    normalization statistics.
main(["eval", "--model", path("run/actor.txt"),
      "--data", path("blobs.csv"), "--label-column", "label",
      "--norm", path("run/norm.txt"),
      "--out", path("full_eval.json")])

# 4. Compare all three variants across two seeds; medians land in the
#    last rows of comparison.csv.
main(["compare", "--config", path("run.cfg"), "--seeds", "2",
      "--out", path("cmp")])
with open(path("cmp/comparison.csv")) as fh:
    print(fh.read())
