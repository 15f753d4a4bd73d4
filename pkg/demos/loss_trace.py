"""Follow the objective and the neuron count through a training run.

    python demos/loss_trace.py [molecule] [trace.csv]

With the default 552-atom molecule the run takes several minutes.  The
printed windows show the sparsity term dropping out of the objective at
``sparse_iter`` and the neuron count freezing from then on.
"""
import sys

import numpy as np

from molsparse import TrainConfig, load_molecule, train

name = sys.argv[1] if len(sys.argv) > 1 else 'gramicidin2'
cfg = TrainConfig()
params, trace = train(load_molecule(name), cfg)
if len(sys.argv) > 2:
    trace.to_csv(sys.argv[2])

losses, counts, rho1 = trace.losses, trace.neuron_counts, trace.rho1s
print(f'{name}: {counts[0]} -> {counts[-1]} neurons')
print(' iterations     median loss  neurons  share of steps with rho1 > 0')
for lo in range(0, cfg.max_iter, 500):
    hi = lo + 500
    print(f'{lo + 1:5d}-{hi:<5d} {np.median(losses[lo:hi]):14.2f} {counts[hi - 1]:8d}'
          f' {np.mean(rho1[lo:hi] > 0):8.2f}')
