"""Ground-state search for the transverse-field Ising chain.

Optimizes the energy of an isometric MPS over the manifold of site
unitaries with Riemannian L-BFGS, then does the same for a small binary
MERA, comparing both to exact diagonalization of the dense Hamiltonian.

Run with:  python3 demos/train_tfi.py [--length L] [--max-bond M]
"""

import argparse

import numpy as np

from tnsp import hamiltonians, mera, mps, riemannian
from tnsp.tensor_core import RngSeed, kron


def dense_ground(placements, length, pbc=False):
    h = sum(hamiltonians.embed_term(t, length, start, pbc=pbc)
            for t, start in placements)
    return float(np.linalg.eigvalsh(h)[0])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--length", type=int, default=8)
    ap.add_argument("--max-bond", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-iters", type=int, default=500)
    args = ap.parse_args()

    bond = hamiltonians.tfi_bond_term()
    placements = [(bond, i) for i in range(args.length - 1)]
    exact = dense_ground(placements, args.length)

    print("open TFI chain, L=%d, J=h=1" % args.length)
    print("exact ground energy: %.12f" % exact)
    print()

    chain = mps.random_mps(args.length, 2, args.max_bond,
                           RngSeed(args.seed).rng(0))
    trace = riemannian.minimize(
        chain, placements, method="lbfgs",
        config={"max_iters": args.max_iters, "gtol": 1e-10})
    final = trace.final_energy
    print("MPS bond %d, L-BFGS: %d iterations, converged=%s"
          % (args.max_bond, len(trace.iterations) - 1, trace.converged))
    print("  final energy %.12f   relative error %.2e"
          % (final, abs(final - exact) / abs(exact)))

    # Small binary MERA on 8 sites with a reflection-symmetric
    # three-site embedding of the bond term.
    h2 = bond.matrix
    h3 = 0.5 * (kron(h2, np.eye(2)) + kron(np.eye(2), h2))
    term3 = hamiltonians.LocalTerm(h3, 3, 2)
    sites = 8
    mera_placements = [(term3, i) for i in range(sites)]
    exact_pbc = dense_ground(mera_placements, sites, pbc=True)

    net = mera.random_mera("binary1d", 2, 1, 3, RngSeed(args.seed + 1).rng(0))
    start = mera.expectation_sum(net, mera_placements)
    trace = riemannian.minimize(
        net, mera_placements, method="lbfgs",
        config={"max_iters": 150})
    final = trace.final_energy
    print()
    print("binary MERA chi=2, depth 1, periodic chain of %d sites" % sites)
    print("  exact ground %.12f" % exact_pbc)
    print("  energy %.12f -> %.12f" % (start, final))
    print("  fraction of the gap to the ground state recovered: %.3f"
          % ((start - final) / (start - exact_pbc)))


if __name__ == "__main__":
    main()
