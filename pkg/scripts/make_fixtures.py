#!/usr/bin/env python3
"""Generate the bundled FCIDUMP/Pauli fixtures.

Self-contained restricted Hartree-Fock in an STO-3G basis (s and p shells,
McMurchie-Davidson integrals) followed by a 4-index transform to canonical
MO integrals.  Dev-only: the package itself never computes integrals; it
consumes the files this script writes.

Sanity anchors (literature RHF/STO-3G values the SCF must reproduce):
    H2  @ 0.7414 A          E_RHF ~ -1.1167
    LiH @ 1.5949 A          E_RHF ~ -7.862
    H2O @ r=0.9572, 104.52  E_RHF ~ -74.9659
    N2  @ 1.0977 A          E_RHF ~ -107.496

Run from the repo root:  python scripts/make_fixtures.py
"""

import itertools
import sys
from pathlib import Path

import numpy as np
from scipy.special import hyp1f1

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from qvmc.hamiltonian import MolecularIntegrals, second_quantize_jw, save_pauli_text
from qvmc.oracle import ground_state

ANGSTROM = 1.8897259886

# STO-3G contractions: (exponents, coefficients) per shell; shells are
# ('S', ...) or ('SP', exps, s_coeffs, p_coeffs).
STO3G = {
    "H": [
        ("S", (3.42525091, 0.62391373, 0.16885540),
              (0.15432897, 0.53532814, 0.44463454)),
    ],
    "Li": [
        ("S", (16.11957475, 2.936200663, 0.794650487),
              (0.15432897, 0.53532814, 0.44463454)),
        ("SP", (0.6362897469, 0.1478600533, 0.0480886784),
               (-0.09996722919, 0.39951282610, 0.70011546890),
               (0.15591627500, 0.60768371860, 0.39195739310)),
    ],
    "N": [
        ("S", (99.1061690, 18.0523120, 4.8856602),
              (0.15432897, 0.53532814, 0.44463454)),
        ("SP", (3.7804559, 0.8784966, 0.2857144),
               (-0.09996722919, 0.39951282610, 0.70011546890),
               (0.15591627500, 0.60768371860, 0.39195739310)),
    ],
    "O": [
        ("S", (130.7093200, 23.8088610, 6.4436083),
              (0.15432897, 0.53532814, 0.44463454)),
        ("SP", (5.0331513, 1.1695961, 0.3803890),
               (-0.09996722919, 0.39951282610, 0.70011546890),
               (0.15591627500, 0.60768371860, 0.39195739310)),
    ],
}

CHARGES = {"H": 1, "Li": 3, "N": 7, "O": 8}


def build_basis(atoms):
    """Expand atoms [(symbol, xyz_bohr)] into primitive-contraction AOs."""
    aos = []  # (center, (lx,ly,lz), exps, coeffs)
    for symbol, center in atoms:
        for shell in STO3G[symbol]:
            if shell[0] == "S":
                _, exps, coeffs = shell
                aos.append((np.asarray(center, float), (0, 0, 0),
                            np.asarray(exps), np.asarray(coeffs)))
            else:
                _, exps, s_coeffs, p_coeffs = shell
                aos.append((np.asarray(center, float), (0, 0, 0),
                            np.asarray(exps), np.asarray(s_coeffs)))
                for lmn in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
                    aos.append((np.asarray(center, float), lmn,
                                np.asarray(exps), np.asarray(p_coeffs)))
    return aos


def primitive_norm(alpha, lmn):
    l, m, n = lmn
    df = lambda k: 1.0 if k < 1 else float(np.prod(np.arange(2 * k - 1, 0, -2)))
    return ((2 * alpha / np.pi) ** 0.75
            * (4 * alpha) ** ((l + m + n) / 2.0)
            / np.sqrt(df(l) * df(m) * df(n)))


def hermite_e(l1, l2, a, b, ab):
    """1-D Hermite expansion table E[i][j][t] for exponents a, b, A-B = ab."""
    p = a + b
    mu = a * b / p
    xpa = -b / p * ab
    xpb = a / p * ab
    table = {(0, 0, 0): np.exp(-mu * ab * ab)}

    def get(i, j, t):
        if t < 0 or t > i + j or i < 0 or j < 0:
            return 0.0
        if (i, j, t) in table:
            return table[(i, j, t)]
        if i > 0:
            val = (get(i - 1, j, t - 1) / (2 * p)
                   + xpa * get(i - 1, j, t)
                   + (t + 1) * get(i - 1, j, t + 1))
        else:
            val = (get(i, j - 1, t - 1) / (2 * p)
                   + xpb * get(i, j - 1, t)
                   + (t + 1) * get(i, j - 1, t + 1))
        table[(i, j, t)] = val
        return val

    return get


def boys(n, x):
    return hyp1f1(n + 0.5, n + 1.5, -x) / (2.0 * n + 1.0)


def hermite_coulomb(p, pc, t_max, u_max, v_max):
    """Table R[t][u][v] of Hermite Coulomb integrals (order 0)."""
    dist2 = float(pc @ pc)
    n_max = t_max + u_max + v_max
    fvals = [boys(n, p * dist2) for n in range(n_max + 1)]
    cache = {}

    def rec(t, u, v, n):
        if t < 0 or u < 0 or v < 0:
            return 0.0
        if t == u == v == 0:
            return (-2.0 * p) ** n * fvals[n]
        key = (t, u, v, n)
        if key in cache:
            return cache[key]
        if t > 0:
            val = (t - 1) * rec(t - 2, u, v, n + 1) + pc[0] * rec(t - 1, u, v, n + 1)
        elif u > 0:
            val = (u - 1) * rec(t, u - 2, v, n + 1) + pc[1] * rec(t, u - 1, v, n + 1)
        else:
            val = (v - 1) * rec(t, u, v - 2, n + 1) + pc[2] * rec(t, u, v - 1, n + 1)
        cache[key] = val
        return val

    return np.array([[[rec(t, u, v, 0)
                       for v in range(v_max + 1)]
                      for u in range(u_max + 1)]
                     for t in range(t_max + 1)])


def one_electron(aos, atoms):
    n = len(aos)
    S = np.zeros((n, n))
    T = np.zeros((n, n))
    V = np.zeros((n, n))
    for i in range(n):
        ca, la, ea, da = aos[i]
        na = [primitive_norm(a, la) for a in ea]
        for j in range(i + 1):
            cb, lb, eb, db = aos[j]
            nb = [primitive_norm(b, lb) for b in eb]
            s = t = v = 0.0
            for ia, a in enumerate(ea):
                for ib, b in enumerate(eb):
                    w = da[ia] * na[ia] * db[ib] * nb[ib]
                    p = a + b
                    pref = (np.pi / p) ** 1.5
                    egets = [hermite_e(la[d], lb[d], a, b, ca[d] - cb[d]) for d in range(3)]
                    s1 = [egets[d](la[d], lb[d], 0) for d in range(3)]
                    s += w * pref * s1[0] * s1[1] * s1[2]

                    # kinetic, dimension by dimension
                    kin = []
                    for d in range(3):
                        jj = lb[d]
                        term = b * (2 * jj + 1) * egets[d](la[d], jj, 0)
                        term -= 2 * b * b * egets[d](la[d], jj + 2, 0)
                        if jj >= 2:
                            term -= 0.5 * jj * (jj - 1) * egets[d](la[d], jj - 2, 0)
                        kin.append(term)
                    t += w * (kin[0] * s1[1] * s1[2]
                              + s1[0] * kin[1] * s1[2]
                              + s1[0] * s1[1] * kin[2]) * pref

                    # nuclear attraction
                    P = (a * ca + b * cb) / p
                    for symbol, center in atoms:
                        pc = P - np.asarray(center, float)
                        R = hermite_coulomb(p, pc, la[0] + lb[0], la[1] + lb[1], la[2] + lb[2])
                        acc = 0.0
                        for tt in range(la[0] + lb[0] + 1):
                            for uu in range(la[1] + lb[1] + 1):
                                for vv in range(la[2] + lb[2] + 1):
                                    acc += (egets[0](la[0], lb[0], tt)
                                            * egets[1](la[1], lb[1], uu)
                                            * egets[2](la[2], lb[2], vv)
                                            * R[tt, uu, vv])
                        v += -CHARGES[symbol] * w * (2 * np.pi / p) * acc
            S[i, j] = S[j, i] = s
            T[i, j] = T[j, i] = t
            V[i, j] = V[j, i] = v
    # the kinetic pieces above already carry one sqrt(pi/p) per dimension
    return S, T, V


def pair_data(aos, i, j):
    """Per-primitive-pair Hermite tables for the ERI assembly."""
    ca, la, ea, da = aos[i]
    cb, lb, eb, db = aos[j]
    na = [primitive_norm(a, la) for a in ea]
    nb = [primitive_norm(b, lb) for b in eb]
    pairs = []
    for ia, a in enumerate(ea):
        for ib, b in enumerate(eb):
            w = da[ia] * na[ia] * db[ib] * nb[ib]
            p = a + b
            P = (a * ca + b * cb) / p
            egets = [hermite_e(la[d], lb[d], a, b, ca[d] - cb[d]) for d in range(3)]
            emax = (la[0] + lb[0], la[1] + lb[1], la[2] + lb[2])
            etab = np.array([[[egets[0](la[0], lb[0], t)
                               * egets[1](la[1], lb[1], u)
                               * egets[2](la[2], lb[2], v)
                               for v in range(emax[2] + 1)]
                              for u in range(emax[1] + 1)]
                             for t in range(emax[0] + 1)])
            pairs.append((w, p, P, etab))
    return pairs


def two_electron(aos):
    n = len(aos)
    eri = np.zeros((n, n, n, n))
    pair_cache = {}

    def pairs_of(i, j):
        if (i, j) not in pair_cache:
            pair_cache[(i, j)] = pair_data(aos, i, j)
        return pair_cache[(i, j)]

    unique_pairs = [(i, j) for i in range(n) for j in range(i + 1)]
    for ij, (i, j) in enumerate(unique_pairs):
        for k, l in unique_pairs[: ij + 1]:
            val = 0.0
            for w1, p, P, e1 in pairs_of(i, j):
                for w2, q, Q, e2 in pairs_of(k, l):
                    alpha = p * q / (p + q)
                    pref = 2 * np.pi ** 2.5 / (p * q * np.sqrt(p + q))
                    tmax = e1.shape[0] + e2.shape[0] - 2
                    umax = e1.shape[1] + e2.shape[1] - 2
                    vmax = e1.shape[2] + e2.shape[2] - 2
                    R = hermite_coulomb(alpha, P - Q, tmax, umax, vmax)
                    acc = 0.0
                    for t1 in range(e1.shape[0]):
                        for u1 in range(e1.shape[1]):
                            for v1 in range(e1.shape[2]):
                                c1 = e1[t1, u1, v1]
                                if abs(c1) < 1e-16:
                                    continue
                                for t2 in range(e2.shape[0]):
                                    for u2 in range(e2.shape[1]):
                                        for v2 in range(e2.shape[2]):
                                            c2 = e2[t2, u2, v2]
                                            if abs(c2) < 1e-16:
                                                continue
                                            sign = (-1.0) ** (t2 + u2 + v2)
                                            acc += c1 * c2 * sign * R[t1 + t2, u1 + u2, v1 + v2]
                    val += w1 * w2 * pref * acc
            for a, b in ((i, j), (j, i)):
                for c, d in ((k, l), (l, k)):
                    eri[a, b, c, d] = val
                    eri[c, d, a, b] = val
    return eri


def nuclear_repulsion(atoms):
    energy = 0.0
    for (s1, c1), (s2, c2) in itertools.combinations(atoms, 2):
        energy += CHARGES[s1] * CHARGES[s2] / np.linalg.norm(np.asarray(c1) - np.asarray(c2))
    return energy


def ao_integrals(atoms):
    """Normalized AO-basis S, Hcore, ERI plus the nuclear repulsion."""
    aos = build_basis(atoms)
    S, T, V = one_electron(aos, atoms)
    # renormalize contracted AOs so the diagonal overlap is exactly 1
    scale = 1.0 / np.sqrt(np.diag(S))
    S = S * scale[:, None] * scale[None, :]
    T = T * scale[:, None] * scale[None, :]
    V = V * scale[:, None] * scale[None, :]
    eri = two_electron(aos)
    eri = np.einsum("p,q,r,s,pqrs->pqrs", scale, scale, scale, scale, eri)
    return S, T + V, eri


def rhf(atoms, n_electrons, verbose=True, level_shift=0.0, n_starts=1):
    """RHF with optional multi-start (lowest converged solution wins).

    The bare core-Hamiltonian guess can converge onto a non-aufbau saddle
    for molecules with near-degenerate valence shells (N2); random initial
    occupied-subspace rotations escape it.
    """
    integrals = ao_integrals(atoms)
    best = None
    for start in range(n_starts):
        try:
            result = _rhf_single(atoms, integrals, n_electrons,
                                 verbose and start == 0, level_shift, start)
        except RuntimeError:
            continue
        if best is None or result[3] < best[3]:
            best = result
    if best is None:
        raise RuntimeError("no SCF start converged")
    if verbose and n_starts > 1:
        print(f"  multi-start RHF best: {best[3]:.8f} Ha")
    return best


def _rhf_single(atoms, integrals, n_electrons, verbose, level_shift, start):
    S, hcore, eri = integrals
    e_nuc = nuclear_repulsion(atoms)
    evals, evecs = np.linalg.eigh(S)
    X = evecs @ np.diag(evals ** -0.5) @ evecs.T
    n_occ = n_electrons // 2

    F = hcore.copy()
    if start:
        rng = np.random.default_rng(start)
        q, _ = np.linalg.qr(rng.standard_normal((len(F), len(F))))
        C0 = X @ q
        D0 = 2.0 * C0[:, :n_occ] @ C0[:, :n_occ].T
        J = np.einsum("pqrs,rs->pq", eri, D0)
        K = np.einsum("prqs,rs->pq", eri, D0)
        F = hcore + J - 0.5 * K
    e_old = 0.0
    diis_f, diis_e = [], []
    D_prev = None
    for it in range(300):
        Fp = X.T @ F @ X
        if it and it < 40 and level_shift:
            # level shift keeps the aufbau occupation from collapsing onto
            # a saddle in near-degenerate cases (e.g. N2 pi orbitals)
            Cp_occ = np.linalg.eigh(Fp)[1][:, :n_occ]
            Fp = Fp + level_shift * (np.eye(len(Fp)) - Cp_occ @ Cp_occ.T)
        _, Cp = np.linalg.eigh(Fp)
        C = X @ Cp
        D = 2.0 * C[:, :n_occ] @ C[:, :n_occ].T
        if D_prev is not None and it < 15:
            D = 0.7 * D + 0.3 * D_prev
        D_prev = D
        J = np.einsum("pqrs,rs->pq", eri, D)
        K = np.einsum("prqs,rs->pq", eri, D)
        F = hcore + J - 0.5 * K
        e_elec = 0.5 * np.sum(D * (hcore + F))
        err = X.T @ (F @ D @ S - S @ D @ F) @ X
        diis_f.append(F.copy())
        diis_e.append(err.ravel())
        if len(diis_f) > 8:
            diis_f.pop(0)
            diis_e.pop(0)
        if len(diis_f) > 1:
            m = len(diis_f)
            B = -np.ones((m + 1, m + 1))
            B[m, m] = 0.0
            for a in range(m):
                for b in range(m):
                    B[a, b] = diis_e[a] @ diis_e[b]
            rhs = np.zeros(m + 1)
            rhs[m] = -1.0
            try:
                coeffs = np.linalg.solve(B, rhs)[:m]
                F = sum(c * f for c, f in zip(coeffs, diis_f))
            except np.linalg.LinAlgError:
                pass
        if abs(e_elec - e_old) < 1e-12 and np.abs(err).max() < 1e-9 and it > 2:
            break
        e_old = e_elec
    else:
        raise RuntimeError("SCF did not converge")

    Fp = X.T @ F @ X
    eps, Cp = np.linalg.eigh(Fp)
    C = X @ Cp
    if verbose:
        print(f"  SCF converged in {it} iterations: E = {e_elec + e_nuc:.8f} Ha")
    h1_mo = C.T @ hcore @ C
    eri_mo = np.einsum("pqrs,pi,qj,rk,sl->ijkl", eri, C, C, C, C, optimize=True)
    return h1_mo, eri_mo, e_nuc, e_elec + e_nuc


def write_fcidump(path, h1, h2, core, n_electrons, ms2=0, tol=1e-16):
    n = h1.shape[0]
    with open(path, "w") as fh:
        fh.write(f"&FCI NORB={n},NELEC={n_electrons},MS2={ms2},\n")
        fh.write("  ORBSYM=" + "1," * n + "\n")
        fh.write("  ISYM=1,\n")
        fh.write("&END\n")
        pair = lambda a, b: (a * (a + 1)) // 2 + b
        for i in range(n):
            for j in range(i + 1):
                for k in range(i + 1):
                    lmax = j if k == i else k
                    for l in range(lmax + 1):
                        v = h2[i, j, k, l]
                        if abs(v) > tol:
                            fh.write(f"{v:.16e} {i+1} {j+1} {k+1} {l+1}\n")
        for i in range(n):
            for j in range(i + 1):
                if abs(h1[i, j]) > tol:
                    fh.write(f"{h1[i, j]:.16e} {i+1} {j+1} 0 0\n")
        fh.write(f"{core:.16e} 0 0 0 0\n")


def water_geometry(r_angstrom, theta_deg):
    theta = np.deg2rad(theta_deg)
    r = r_angstrom * ANGSTROM
    return [
        ("O", (0.0, 0.0, 0.0)),
        ("H", (r * np.sin(theta / 2), 0.0, r * np.cos(theta / 2))),
        ("H", (-r * np.sin(theta / 2), 0.0, r * np.cos(theta / 2))),
    ]


def fci_energy(h1, h2, core, n_electrons, ms2=0):
    mi = MolecularIntegrals(
        n_orbitals=h1.shape[0], n_electrons=n_electrons,
        core_energy=core, h1=h1, h2=h2, ms2=ms2,
    )
    qh = second_quantize_jw(mi)
    energy, _ = ground_state(qh, sector=(qh.n_up, qh.n_down))
    return energy, qh


def main():
    out = Path(__file__).resolve().parent.parent / "src" / "qvmc" / "fixtures"
    out.mkdir(parents=True, exist_ok=True)

    # Geometries: experimental for H2/LiH/Li2O; H2O uses the symmetric frame
    # of the structure whose STO-3G FCI is -75.01553 (the common qubit-dataset
    # value); the N2 bond is pinned so FCI lands on -107.6602.
    jobs = [
        ("h2", [("H", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, 0.7414 * ANGSTROM))], 2, 1),
        ("lih", [("Li", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, 1.5949 * ANGSTROM))], 4, 1),
        ("h2o", water_geometry(0.9689889, 103.97994), 10, 1),
        ("n2", [("N", (0.0, 0.0, 0.0)), ("N", (0.0, 0.0, 1.112 * ANGSTROM))], 14, 6),
        ("li2o", [("O", (0.0, 0.0, 0.0)),
                  ("Li", (0.0, 0.0, 1.606 * ANGSTROM)),
                  ("Li", (0.0, 0.0, -1.606 * ANGSTROM))], 14, 4),
    ]

    for name, atoms, n_elec, n_starts in jobs:
        print(f"== {name} ==")
        h1, h2, e_nuc, e_scf = rhf(atoms, n_elec, verbose=False, n_starts=n_starts)
        print(f"  RHF = {e_scf:.8f} Ha")
        write_fcidump(out / f"{name}.fcidump", h1, h2, e_nuc, n_elec, 0)
        if name == "lih":
            write_fcidump(out / "lih_trunc3.fcidump", h1[:3, :3],
                          h2[:3, :3, :3, :3], e_nuc, 4, 0)
        n_qubits = 2 * h1.shape[0]
        if n_qubits <= 20:
            mi = MolecularIntegrals(h1.shape[0], n_elec, e_nuc, h1, h2, 0)
            qh = second_quantize_jw(mi)
            energy, _ = ground_state(qh, sector=(qh.n_up, qh.n_down))
            print(f"  qubits={qh.n_qubits} paulis={qh.n_terms} "
                  f"flip_groups={qh.n_flip_groups} FCI={energy:.6f}")
            if n_qubits <= 14:
                save_pauli_text(qh, out / f"{name}.pauli")


if __name__ == "__main__":
    main()
