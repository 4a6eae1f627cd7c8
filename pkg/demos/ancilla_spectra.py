"""Read the pigeonhole verdicts off simulated ancilla NMR spectra.

The gate-model story in demos/pigeonhole_probes.py has an ensemble
counterpart: a 4-spin molecule where three spins play the particles and
the fourth is the probe ancilla.  After each pair probe, a single 90
degree read-out pulse on the ancilla turns the register populations
into a stick spectrum.  The sign of each line encodes whether the
probed pair shared an arm for that detector outcome.

Run from the repository root:

    python3 demos/ancilla_spectra.py

Writes rendered line shapes for each stage into demos/out/ as CSV, and
a PNG overview if matplotlib is importable.
"""

import pathlib

import numpy as np

from qpigeon import (
    STAGES,
    default_spin_system,
    detect,
    qphe_stage,
    render,
    rendered_to_csv,
)

OUT = pathlib.Path(__file__).resolve().parent / "out"
LINEWIDTH = 15.0  # Hz, cosmetic


def show_spectrum(name, spec):
    print(f"\n{name}")
    for line in sorted(spec.lines, key=lambda l: l.frequency):
        if abs(line.amplitude) < 1e-9:
            bar = "."
        elif line.amplitude > 0:
            bar = "+" * max(1, round(64 * line.amplitude))
        else:
            bar = "-" * max(1, round(-64 * line.amplitude))
        print(f"  {line.label}  {line.frequency:10.2f} Hz  "
              f"{line.amplitude:+.6f}  {bar}")


def main():
    sys = default_spin_system()
    print(f"spin system: {', '.join(sys.labels)}  (ancilla = {sys.labels[sys.ancilla_index - 1]})")
    print(f"offsets (Hz): {np.array2string(sys.nu, precision=1)}")

    OUT.mkdir(exist_ok=True)
    grids = {}
    for stage in STAGES:
        state = qphe_stage(stage, sys)
        spec = detect(state, sys)
        show_spectrum(f"stage '{stage}'", spec)

        freqs = [l.frequency for l in spec.lines]
        grid = np.linspace(min(freqs) - 8 * LINEWIDTH, max(freqs) + 8 * LINEWIDTH, 1500)
        intensity = render(spec, LINEWIDTH, grid)
        (OUT / f"rendered_{stage}.csv").write_text(rendered_to_csv(grid, intensity))
        grids[stage] = (grid, intensity)

    print("\nreading the probe stages row by row:")
    print("  mzi : all eight lines positive, the interferometer by itself")
    print("        leaves the ancilla alone")
    print("  u12 : lines flip negative exactly on outcomes where particles")
    print("        1 and 2 exit at the same detector (000,001,110,111)")
    print("  u13, u23: same rule for their pairs")
    print(f"\nrendered CSVs written under {OUT}")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not available, skipping the PNG")
        return

    fig, axes = plt.subplots(len(STAGES), 1, figsize=(8, 11), sharex=True)
    for ax, stage in zip(axes, STAGES):
        grid, intensity = grids[stage]
        ax.plot(grid, intensity, lw=0.9)
        ax.axhline(0.0, color="0.8", lw=0.6)
        ax.set_ylabel(stage)
    axes[-1].set_xlabel("offset from carrier (Hz)")
    fig.suptitle("ancilla spectra through the pigeonhole sequence")
    fig.tight_layout()
    path = OUT / "ancilla_spectra.png"
    fig.savefig(path, dpi=140)
    print(f"figure written to {path}")


if __name__ == "__main__":
    main()
