"""Regenerate the PQR files bundled in src/molsparse/data.

Needs RDKit (not a runtime dependency).  Structures are built from SMILES /
sequence with hydrogens, embedded with seeded ETKDG and relaxed with MMFF,
then written with PARSE-style radii and Gasteiger charges.

    python scripts/make_molecules.py
"""
import os

import numpy as np
from rdkit import Chem
from rdkit.Chem import AllChem

OUT = os.path.join(os.path.dirname(__file__), '..', 'src', 'molsparse', 'data')

# PARSE radii; P is not in PARSE and takes a common 1.9 A value
RADII = {'H': 1.0, 'C': 1.7, 'N': 1.5, 'O': 1.4, 'S': 1.85, 'P': 1.9}

ADP = 'Nc1ncnc2c1ncn2[C@@H]1O[C@H](COP(=O)([O-])OP(=O)([O-])[O-])[C@@H](O)[C@H]1O'


def gramicidin_monomer():
    # HCO-VGALAVVVWLWLWLW-NHCH2CH2OH, stereochemistry left to the sequence builder
    pep = Chem.MolFromSequence('VGALAVVVWLWLWLW')
    smi = Chem.MolToSmiles(pep)
    mol = Chem.MolFromSmiles(smi)
    rw = Chem.RWMol(mol)
    # N-terminal amine: the only N with two H attached to an alpha carbon
    nterm = [a.GetIdx() for a in rw.GetAtoms()
             if a.GetSymbol() == 'N' and a.GetTotalNumHs() == 2]
    # C-terminal acid oxygen: O with one H bonded to a carbonyl carbon
    oterm = [a.GetIdx() for a in rw.GetAtoms()
             if a.GetSymbol() == 'O' and a.GetTotalNumHs() == 1]
    assert len(nterm) == 1 and len(oterm) == 1
    c = rw.AddAtom(Chem.Atom(6))
    o = rw.AddAtom(Chem.Atom(8))
    rw.AddBond(nterm[0], c, Chem.BondType.SINGLE)
    rw.AddBond(c, o, Chem.BondType.DOUBLE)
    # replace acid OH by NH-CH2-CH2-OH
    acid_o = rw.GetAtomWithIdx(oterm[0])
    acid_o.SetAtomicNum(7)
    c1 = rw.AddAtom(Chem.Atom(6))
    c2 = rw.AddAtom(Chem.Atom(6))
    o2 = rw.AddAtom(Chem.Atom(8))
    rw.AddBond(oterm[0], c1, Chem.BondType.SINGLE)
    rw.AddBond(c1, c2, Chem.BondType.SINGLE)
    rw.AddBond(c2, o2, Chem.BondType.SINGLE)
    mol = rw.GetMol()
    Chem.SanitizeMol(mol)
    return mol


def embed(mol, seed):
    mol = Chem.AddHs(mol)
    params = AllChem.ETKDGv3()
    params.randomSeed = seed
    params.useRandomCoords = mol.GetNumAtoms() > 200
    if AllChem.EmbedMolecule(mol, params) != 0:
        raise RuntimeError('embedding failed')
    AllChem.MMFFOptimizeMolecule(mol, maxIters=2000)
    AllChem.ComputeGasteigerCharges(mol)
    return mol


def records(mol, offset=np.zeros(3), start=1, resname='MOL'):
    conf = mol.GetConformer()
    out = []
    for k, atom in enumerate(mol.GetAtoms()):
        p = conf.GetAtomPosition(atom.GetIdx())
        sym = atom.GetSymbol()
        q = float(atom.GetDoubleProp('_GasteigerCharge'))
        x, y, z = np.array([p.x, p.y, p.z]) + offset
        name = f'{sym}{k + 1}'[:4]
        out.append(f'ATOM  {start + k:5d} {name:<4s} {resname} A   1    '
                   f'{x:8.3f}{y:8.3f}{z:8.3f} {q:7.4f} {RADII[sym]:6.4f}')
    return out


def write(name, lines, remark):
    path = os.path.join(OUT, f'{name}.pqr')
    with open(path, 'w') as fh:
        fh.write(f'REMARK   1 {remark}\n')
        fh.write('\n'.join(lines) + '\nTER\nEND\n')
    print(f'{path}: {len(lines)} atoms')


def main():
    os.makedirs(OUT, exist_ok=True)

    adp = embed(Chem.MolFromSmiles(ADP), seed=7)
    write('adp', records(adp, resname='ADP'), 'ADP(3-) with hydrogens, 39 atoms')

    pep = embed(Chem.MolFromSequence('SYSMEHFRW'), seed=11)
    write('syspep', records(pep, resname='PEP'),
          'SYSMEHFRW peptide with hydrogens, 163 atoms')

    mono = gramicidin_monomer()
    a = embed(mono, seed=3)
    b = embed(mono, seed=5)
    ca = a.GetConformer().GetPositions().mean(axis=0)
    cb = b.GetConformer().GetPositions().mean(axis=0)
    extent = np.ptp(a.GetConformer().GetPositions()[:, 2])
    lines = records(a, offset=-ca)
    lines += records(b, offset=-cb + np.array([0.0, 0.0, 0.5 * extent + 6.0]),
                     start=len(lines) + 1)
    write('gramicidin2', lines, 'two gramicidin A chains with hydrogens, 552 atoms')


if __name__ == '__main__':
    main()
