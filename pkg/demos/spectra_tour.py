"""Tour of the layer-transition channel spectra.

For each network family the second moment of a random layer acts on
doubled operators as a small transfer matrix.  Its eigenvalues control
how fast gradient signals decay as they descend through the network:
the leading eigenvalue is always 1 (norm preservation) and the second
one, eta, sets the decay rate per layer.  Multiplying eta by the number
of branches per layer gives the factor by which the variance of a
top-layer gradient changes when the network gets one layer deeper.

Everything printed here is a closed-form number; nothing is sampled.

Run with:  python3 demos/spectra_tour.py
"""

from tnsp import channel_spectra as cs


def show(family, flavor, chis):
    print("%s / %s" % (family, flavor))
    for chi in chis:
        eigs = cs.spectrum(family, flavor, chi)
        body = "  ".join("%.6f" % e for e in eigs)
        print("  chi=%d  spectrum: %s" % (chi, body))
    chi = chis[0]
    eta = cs.spectrum(family, flavor, chi)[1]
    b = cs.branch_count(family)
    ratio = cs.layer_variance_ratio(family, chi, flavor)
    print("  chi=%d  eta=%.6f  branches=%d  variance ratio per layer=%.6f"
          % (chi, eta, b, ratio))
    print()


def main():
    print("Position-averaged layer channels, sorted eigenvalues.")
    print()
    show("binary1d", "mera", (2, 3))
    show("ternary1d", "mera", (2, 3))
    show("binary1d", "ttns", (2, 3))
    show("ternary1d", "ttns", (2,))
    show("nonary2d", "ttns", (2,))

    print("A variance ratio below 1 means deeper networks have smaller")
    print("top-layer gradients: the decay per layer beats the growth in")
    print("the number of contributing lattice sites.  All the families")
    print("above sit below 1 at small chi, and the ratio shrinks further")
    print("as chi grows:")
    print()
    for chi in (2, 3, 4, 6, 8):
        r = cs.layer_variance_ratio("ternary1d", chi)
        print("  ternary1d chi=%d: ratio=%.6f" % (chi, r))


if __name__ == "__main__":
    main()
