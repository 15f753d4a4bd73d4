"""Sparse representation of Gaussian molecular surfaces with ellipsoid RBF networks."""
from .pqr import (Atom, AtomSet, BoundingBox, PQRParseError, EmptyMoleculeError, parse_pqr,
                  read_pqr, write_pqr, bounding_box, load_molecule, bundled_molecules)
from .density import DensityMap, UniformGrid, ScalarField, GridTooLargeError, grid_for_box, phi, sample_grid
from .erbf import (ErbfNeuron, ErbfParams, LossWeights, DivergenceError, rotation_matrix, psi,
                   forward, loss, loss_gradient, loss_and_gradient, save_model, load_model)
from .trainer import (TrainConfig, TrainingSet, TrainTrace, build_training_set, initialize,
                      prune, adam_step, train)
from .mesher import TriMesh, marching_cubes, mesh_from_model, read_mesh, write_mesh
from .metrics import (ShapeReport, SparseStats, mesh_area, mesh_volume, hausdorff,
                      compare_shapes, sparse_stats)

__version__ = '0.1.0'
