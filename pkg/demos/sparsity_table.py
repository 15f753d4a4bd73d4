"""Sparsify every bundled molecule through the CLI and tabulate the results.

    python demos/sparsity_table.py [workdir]

Each run writes a model, a trace and a manifest into ``workdir`` (default
``runs``); ``molsparse report`` then tabulates atoms, neurons and sparse
ratio sorted by atom count.  The largest molecule dominates the runtime
(several minutes).
"""
import sys
from pathlib import Path

import molsparse
from molsparse.cli import main
from molsparse.pqr import bundled_molecules

work = Path(sys.argv[1] if len(sys.argv) > 1 else 'runs')
work.mkdir(exist_ok=True)
data = Path(molsparse.__file__).parent / 'data'

for name in bundled_molecules():
    status = main(['sparsify', '--input', str(data / f'{name}.pqr'),
                   '--out', str(work / f'{name}.json')])
    if status:
        sys.exit(status)

table = work / 'sparsity.csv'
main(['report', '--manifests', str(work), '--out', str(table)])
print(table.read_text(), end='')
