"""Fit a sparse network to ADP and compare the surfaces before and after.

    python demos/sparsify_adp.py [seed]

Prints the neuron count, then compares the surface of the original map
with that of the sparse model, both meshed on the same 0.5 A lattice.
Takes about 10 s.
"""
import sys

from molsparse import (DensityMap, TrainConfig, bounding_box, compare_shapes, load_molecule,
                       mesh_from_model, train)

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 42
atoms = load_molecule('adp')
params, trace = train(atoms, TrainConfig(seed=seed))
print(f'ADP: {len(atoms)} atoms -> {len(params)} neurons')

# neuron count at every 1000th iteration
counts = trace.neuron_counts
print('neurons every 1000 iterations:', counts[999::1000].tolist())

box = bounding_box(atoms, 5.0)
before = mesh_from_model(DensityMap(atoms, 0.5), box, 0.5, 1.0)
after = mesh_from_model(params, box, 0.5, 1.0)
rep = compare_shapes(before, after, molecule='adp')
print(f'area   {rep.area_a:9.2f} -> {rep.area_b:9.2f}  (rel. error {rep.error_area:.4f})')
print(f'volume {rep.volume_a:9.2f} -> {rep.volume_b:9.2f}  (rel. error {rep.error_volume:.4f})')
print(f'Hausdorff distance {rep.hausdorff:.3f} A')
