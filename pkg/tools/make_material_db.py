"""Regenerate src/gassense/data/materials.yaml.

Oscillator materials are written as given below. GaAs, Ge, NaCl and Ir are
written as tables of Im eps(w) sampled from damped Lorentz/Drude fits that
approximate handbook optical constants (static and high-frequency dielectric
constants, phonon and interband peak positions). The package maps those
tables to the imaginary axis with its own Kramers-Kronig routine.

Run:  python tools/make_material_db.py > src/gassense/data/materials.yaml
"""
import numpy as np
from scipy.constants import e, hbar

EV = e / hbar  # rad/s per eV

# name: (density kg/m^3, [(c, w rad/s)], [(d, rate rad/s)], source)
OSCILLATORS = {
    "fiber_sio2": (2200.0, [(1.703, 1.88e14), (1.098, 2.033e16)], [],
                   "two-oscillator fused silica (IR + UV); eps(0)=3.80, n^2=2.10"),
    "silica": (2200.0, [(0.84, 1.30e14), (0.86, 2.00e14), (1.10, 2.00e16)], [],
               "multi-oscillator silica, approximate; eps(0)=3.80"),
    "ptfe": (2200.0, [(0.25, 1.80e14), (0.47, 1.50e16), (0.38, 2.80e16)], [],
             "polytetrafluoroethylene, approximate; eps(0)=2.10, n^2=1.85"),
    "polystyrene": (1050.0, [(0.03, 1.50e14), (1.05, 9.50e15), (0.48, 2.20e16)], [],
                    "polystyrene, approximate; eps(0)=2.56, n^2=2.53"),
    "mica": (2830.0, [(1.80, 6.00e13), (1.20, 1.40e14), (1.40, 1.60e16)], [],
             "muscovite mica, approximate; eps(0)=5.4, n^2=2.4"),
    "rutile": (4250.0, [(90.0, 2.80e13), (17.0, 7.00e13), (4.20, 6.50e15), (1.60, 1.60e16)], [],
               "rutile TiO2, orientation-averaged, approximate; eps_inf=6.8"),
    "gold": (19300.0, [(6.68e4, 5.30e13), (4.0, 6.50e15), (2.0, 2.50e16)], [(10.0, 5.0e12)],
             "gold: Drude part as low-frequency oscillator (hbar w_p=9.0 eV), interband "
             "oscillators and a Debye term, approximate"),
}

# name: (density, eps-model terms in eV, source); Lorentz term = (f, E0, gamma),
# Drude term = ("drude", hbar w_p, hbar gamma)
TABLES = {
    "gaas": (5320.0, [(2.0, 0.0333, 0.003), (2.5, 3.0, 0.5), (6.0, 4.9, 1.2), (1.4, 10.0, 6.0)],
             "GaAs: damped-oscillator fit to handbook constants (eps0=12.9, eps_inf=10.9, "
             "TO phonon 33 meV, E1/E2 interband peaks); tabulated 1 meV - 100 eV"),
    "germanium": (5323.0, [(3.0, 2.2, 0.5), (10.0, 4.3, 1.2), (2.0, 10.0, 6.0)],
                  "Ge: damped-oscillator fit to handbook constants (eps_inf=16.0, E1/E2 "
                  "interband peaks); tabulated 1 meV - 100 eV"),
    "nacl": (2165.0, [(3.56, 0.0203, 0.002), (0.60, 8.0, 1.0), (0.74, 12.0, 6.0)],
             "NaCl: damped-oscillator fit to handbook constants (eps0=5.9, eps_inf=2.34, "
             "TO phonon 20.3 meV, UV exciton 8 eV); tabulated 1 meV - 100 eV"),
    "iridium": (22560.0, [("drude", 7.5, 0.08), (6.0, 3.0, 3.0), (2.0, 12.0, 8.0)],
                "Ir: Drude (hbar w_p=7.5 eV, hbar gamma=80 meV) plus interband fit to "
                "handbook constants; tabulated 1 meV - 100 eV"),
}


def im_eps(energy, terms):
    out = np.zeros_like(energy)
    for t in terms:
        if t[0] == "drude":
            _, wp, g = t
            out += wp**2 * g / (energy * (energy**2 + g**2))
        else:
            f, e0, g = t
            out += f * e0**2 * g * energy / ((e0**2 - energy**2) ** 2 + (g * energy) ** 2)
    return out


def main():
    print("# Dielectric models of the fibre and sphere materials.")
    print("# Frequencies in rad/s. Oscillator records: eps(i xi) = 1 + sum c/(1+(xi/w)^2)")
    print("# + sum d/(1+xi/r). Table records: [w, Im eps(w)] on the real axis.")
    print("# Generated by tools/make_material_db.py; parameter values are approximate.")
    print("materials:")
    for name, (rho, osc, debye, src) in OSCILLATORS.items():
        print(f"  - name: {name}")
        print("    kind: oscillator")
        print(f"    mass_density: {rho}")
        print(f"    source: \"{src}\"")
        print("    oscillators:")
        for c, w in osc:
            print(f"      - [{c!r}, {w:.4e}]  # {w / EV:.4g} eV")
        if debye:
            print("    debye:")
            for d, r in debye:
                print(f"      - [{d!r}, {r:.4e}]")
    energy = np.logspace(-3, 2, 251)
    for name, (rho, terms, src) in TABLES.items():
        print(f"  - name: {name}")
        print("    kind: table")
        print(f"    mass_density: {rho}")
        print(f"    source: \"{src}\"")
        print("    table:")
        for en, v in zip(energy, im_eps(energy, terms)):
            print(f"      - [{en * EV:.10e}, {v:.10e}]")


if __name__ == "__main__":
    main()
