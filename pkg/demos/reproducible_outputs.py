"""
Counter-based randomness and byte-stable artifacts
==================================================

Every random draw in the library is addressed, not streamed: a Philox
counter keyed by (seed, stream, path, step, draw) yields the same normal
deviate no matter how paths are batched, which thread computes them, or
what ran before.  Consequences demonstrated below:

* ensembles are invariant to the thread count, bit for bit;
* two solvers can consume literally the same noise (common random
  numbers), isolating discretisation differences from sampling noise;
* experiment artifacts (CSV, SVG) are byte-identical across machines,
  thread counts, and output directories for a given config + seed.
"""

import hashlib
import tempfile

import numpy as np

from smelab import rng
from smelab.models import ISOTROPIC_SHIFT, from_spectrum
from smelab.repro import default_config, emit_csv, exp_divergence
from smelab.sga import (AlgoSpec, ConstantMomentum, MSGD, SGD, run_ensemble,
                        run_path)

# --- Addressed draws: batching does not matter ---------------------------
paths = np.arange(5, dtype=np.uint64)
batched = rng.normals(123, rng.STREAM_GAMMA, paths, 7, 0, 3)
single = np.stack([rng.normals(123, rng.STREAM_GAMMA, np.uint64(p), 7, 0, 3)
                   for p in range(5)])
print("batched == one-at-a-time:", bool(np.array_equal(batched, single)))

# --- Thread invariance of Monte Carlo ------------------------------------
model = from_spectrum(ISOTROPIC_SHIFT, [1.0, 0.1])
algo = AlgoSpec(SGD, 0.1, 2.0)
x0 = np.array([1.0, 1.0])
serial = run_ensemble(algo, model, x0, 4000, seed=42, threads=1)
pooled = run_ensemble(algo, model, x0, 4000, seed=42, threads=4)
print("threads=1 vs threads=4 ensemble means identical:",
      bool(np.array_equal(serial.mean, pooled.mean)))

# --- Common random numbers ------------------------------------------------
# Two momentum settings consume the same (seed, path, step) gradient draws,
# so the per-path difference of the two runs has far smaller variance than
# with independent seeds: noise cancels, leaving the algorithmic effect.
algo_a = AlgoSpec(MSGD, 0.1, 2.0, momentum=ConstantMomentum(0.8))
algo_b = AlgoSpec(MSGD, 0.1, 2.0, momentum=ConstantMomentum(1.0))
same, indep = [], []
for path in range(64):
    fa = run_path(algo_a, model, x0, seed=42, path=path)[-1]
    fb = run_path(algo_b, model, x0, seed=42, path=path)[-1]
    fc = run_path(algo_b, model, x0, seed=43, path=path)[-1]
    same.append(fa - fb)
    indep.append(fa - fc)
print("per-path difference std: CRN %.2e vs independent seeds %.2e"
      % (np.std(same), np.std(indep)))

# --- Byte-stable artifacts -------------------------------------------------
# Same config + seed, different directories and thread counts: the emitted
# CSV bytes (config echo included) hash identically.
report = exp_divergence(default_config("divergence"))
digests = []
for threads in (1, 3):
    with tempfile.TemporaryDirectory() as scratch:
        cfg = default_config("divergence")
        cfg = type(cfg)(**{**cfg.__dict__, "threads": threads,
                           "out_dir": scratch})
        paths_written = emit_csv(exp_divergence(cfg), scratch)
        digests.append(hashlib.sha256(
            open(paths_written[0], "rb").read()).hexdigest())
print("csv sha256, threads=1: %s" % digests[0][:16])
print("csv sha256, threads=3: %s" % digests[1][:16])
print("identical:", digests[0] == digests[1])

# The command-line entry points wrap exactly these drivers; for example
#   python -m smelab divergence --out results --seed 0
# writes the same bytes as this script's emit_csv call with that seed.
