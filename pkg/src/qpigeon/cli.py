"""Command-line front end.

Subcommands: ``circuit`` (interferometer outcome distributions and probe
reports), ``spectrum`` (ancilla stick spectra per experiment stage),
``table`` (classical vs quantum arrangement table), ``grape`` (numerical
pulse synthesis), ``sequence-verify`` (score a pulse sequence against a
target gate).

Option precedence is command-line flag, then value from a ``--config`` JSON
file, then built-in default. Exit codes: 0 on success, 1 for configuration
errors, 2 when an optimization or verification does not reach its goal.
All CSV output uses '.' as the decimal separator and 12 significant digits,
so reruns with the same inputs are byte-identical.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import control as ctl
from . import nmr
from .circuit import build_mzi, circuit_to_text, run
from .pigeonhole import build_table, generalized_qphe, table_to_csv, table_to_text
from .qstate import basis_state, measure_distribution

_FMT = "{:.12g}"


def _fmt(x: float) -> str:
    return _FMT.format(x)


@dataclass(frozen=True)
class RunConfig:
    """Validated options shared by the subcommands."""

    particles: int = 3
    probe: str = "none"
    post: str | None = None
    stage: str = "pseudopure"
    target: str = "cnot:1"
    duration: float = 600e-6
    segments: int = 150
    scales: tuple[float, ...] = (0.95, 1.0, 1.05)
    seed: int = 0
    stop_fidelity: float = 0.99
    max_iterations: int = 2000
    epsilon: float = 1.0
    linewidth: float | None = None
    threshold: float = 0.99
    sequence_path: str | None = None
    system_path: str | None = None
    out_dir: str | None = None

    def __post_init__(self):
        if not 2 <= self.particles <= 8:
            raise ValueError("particles must be between 2 and 8")
        valid_probes = {"none"} | {f"{i}{j}" for i in range(1, self.particles + 1)
                        for j in range(i + 1, self.particles + 1)}
        if self.probe not in valid_probes:
            raise ValueError(f"probe must be one of {sorted(valid_probes)}")
        if self.post is not None:
            if len(self.post) != self.particles or set(self.post) - {"0", "1"}:
                raise ValueError(f"post must be {self.particles} bits of 0/1")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.segments < 1:
            raise ValueError("segments must be at least 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.linewidth is not None and self.linewidth <= 0:
            raise ValueError("linewidth must be positive")


def _parse_duration(text: str) -> float:
    """Seconds from strings like '600u', '600us', '1.5ms', '0.002', '2s'."""
    t = text.strip().lower()
    for suffix, mult in (("us", 1e-6), ("ms", 1e-3), ("u", 1e-6), ("m", 1e-3),
                         ("s", 1.0)):
        if t.endswith(suffix):
            return float(t[:-len(suffix)]) * mult
    return float(t)


def _parse_scales(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


def _parse_target(spec: str, sys_: nmr.SpinSystem) -> np.ndarray:
    t = spec.strip().lower()
    if t == "identity":
        return np.eye(2 ** sys_.n_spins)
    if t.startswith("cnot:"):
        c = int(t.split(":", 1)[1])
        return ctl.cnot_unitary(c, sys_.ancilla_index, sys_.n_spins)
    raise ValueError(f"unknown target {spec!r}; use cnot:<spin> or identity")


def _merge(flag, config: dict, key: str, default, convert=None):
    value = flag if flag is not None else config.get(key, default)
    if convert is not None and isinstance(value, str):
        value = convert(value)
    return value


def _write(out_dir: str | None, name: str, text: str):
    if out_dir is None:
        return
    p = Path(out_dir)
    p.mkdir(parents=True, exist_ok=True)
    (p / name).write_text(text, encoding="utf-8")


def _load_system(path: str | None) -> nmr.SpinSystem:
    if path is None:
        return nmr.default_spin_system()
    return nmr.load_spin_system(path)


# ---------------------------------------------------------------------------
# subcommands

def cmd_circuit(cfg: RunConfig) -> int:
    n = cfg.particles
    probe = None if cfg.probe == "none" else (int(cfg.probe[0]), int(cfg.probe[1]))
    circ = build_mzi(n, probe=probe)
    state = run(circ, basis_state("0" * circ.n_qubits))
    dist = measure_distribution(state, list(range(1, circ.n_qubits + 1)))

    print(circuit_to_text(circ))
    rows = ["outcome,probability"]
    if probe is None:
        print("outcome  probability")
        for outcome in sorted(dist):
            print(f"{outcome}  {dist[outcome]:.6f}")
            rows.append(f"{outcome},{_fmt(dist[outcome])}")
    else:
        print("outcome  p_outcome     p_ancilla_flip")
        rows[0] = "outcome,p_outcome,p_ancilla_flip"
        for s in range(2 ** n):
            outcome = format(s, f"0{n}b")
            rep = generalized_qphe(n, probe, post_outcome=outcome)
            print(f"{outcome}  {rep.p_post:.6f}     {rep.p_ancilla_flip_given_post:.6f}"
                  f"  ({rep.flip_tag})")
            rows.append(f"{outcome},{_fmt(rep.p_post)},"
                        f"{_fmt(rep.p_ancilla_flip_given_post)}")
        if cfg.post is not None:
            rep = generalized_qphe(n, probe, post_outcome=cfg.post)
            print(f"\npostselected on {cfg.post}: p_post={_fmt(rep.p_post)} "
                  f"flip={_fmt(rep.p_ancilla_flip_given_post)} ({rep.flip_tag})")
    _write(cfg.out_dir, "circuit.txt", circuit_to_text(circ))
    _write(cfg.out_dir, "distribution.csv", "\n".join(rows) + "\n")
    return 0


def cmd_spectrum(cfg: RunConfig, sys_: nmr.SpinSystem) -> int:
    prep = nmr.PrepSpec(epsilon=cfg.epsilon)
    state = nmr.qphe_stage(cfg.stage, sys_, prep)
    spec = nmr.detect(state, sys_)
    print(f"stage {cfg.stage}: {len(spec.lines)} ancilla lines")
    print("label  frequency_hz    amplitude")
    for ln in spec.lines:
        print(f"{ln.label}    {ln.frequency:12.3f}    {ln.amplitude:+.6f}")
    _write(cfg.out_dir, f"spectrum_{cfg.stage}.csv", nmr.spectrum_to_csv(spec))
    if cfg.linewidth is not None:
        freqs = [ln.frequency for ln in spec.lines]
        lo = min(freqs) - 5 * cfg.linewidth
        hi = max(freqs) + 5 * cfg.linewidth
        grid = np.linspace(lo, hi, 2001)
        rendered = nmr.render(spec, cfg.linewidth, grid)
        _write(cfg.out_dir, f"rendered_{cfg.stage}.csv",
               nmr.rendered_to_csv(grid, rendered))
        print(f"rendered {grid.size} points on [{_fmt(lo)}, {_fmt(hi)}] Hz")
    return 0


def cmd_table(cfg: RunConfig) -> int:
    table = build_table(cfg.particles)
    print(table_to_text(table))
    _write(cfg.out_dir, "table.txt", table_to_text(table))
    _write(cfg.out_dir, "table.csv", table_to_csv(table))
    return 0


def cmd_grape(cfg: RunConfig, sys_: nmr.SpinSystem) -> int:
    target = _parse_target(cfg.target, sys_)
    dt = cfg.duration / cfg.segments
    problem = ctl.ControlProblem(system=sys_, target=target,
                                 n_segments=cfg.segments, dt=dt,
                                 rf_scales=cfg.scales,
                                 stop_fidelity=cfg.stop_fidelity,
                                 max_iterations=cfg.max_iterations)
    result = ctl.grape_optimize(problem, seed=cfg.seed)
    report = [
        f"target {cfg.target} on {sys_.n_spins} spins",
        f"duration {_fmt(cfg.duration)} s in {cfg.segments} segments "
        f"(dt {_fmt(dt)} s)",
        f"rf scales {', '.join(_fmt(s) for s in cfg.scales)}",
        f"iterations {result.iterations} converged {result.converged}",
    ]
    for s, f in zip(cfg.scales, result.fidelity_per_scale):
        report.append(f"fidelity at scale {_fmt(s)}: {f:.6f}")
    report.append(f"average fidelity {result.average_fidelity:.6f}")
    report.append(f"worst-case fidelity {result.worst_fidelity:.6f}")
    text = "\n".join(report)
    print(text)
    _write(cfg.out_dir, "report.txt", text + "\n")
    _write(cfg.out_dir, "controls.csv", ctl.controls_to_csv(result.controls))
    seq = ctl.controls_to_sequence(result.controls, channels=result.channels)
    _write(cfg.out_dir, "sequence.txt", ctl.sequence_to_text(seq))
    if not result.converged:
        print(f"did not reach stop fidelity {_fmt(cfg.stop_fidelity)}",
              file=sys.stderr)
        return 2
    return 0


def cmd_sequence_verify(cfg: RunConfig, sys_: nmr.SpinSystem) -> int:
    target = _parse_target(cfg.target, sys_)
    if cfg.sequence_path is not None:
        seq = ctl.sequence_from_text(Path(cfg.sequence_path).read_text())
        source = cfg.sequence_path
    else:
        if not cfg.target.startswith("cnot:"):
            raise ValueError("built-in sequences exist only for cnot targets")
        seq = ctl.cnot_reference_sequence(int(cfg.target.split(":")[1]), sys_)
        source = "built-in reference"
    u = ctl.simulate_sequence(seq, sys_)
    f_plain = ctl.fidelity_gate(u, target)
    f_zinv = ctl.local_z_invariant_fidelity(u, target)
    print(f"sequence: {source}")
    print(f"segments {len(seq.segments)}  duration {_fmt(seq.duration)} s")
    print(f"plain fidelity          {f_plain:.12f}")
    print(f"z-invariant fidelity    {f_zinv:.12f}")
    if f_zinv < cfg.threshold:
        print(f"below threshold {_fmt(cfg.threshold)}", file=sys.stderr)
        return 2
    print(f"meets threshold {_fmt(cfg.threshold)}")
    return 0


# ---------------------------------------------------------------------------
# argument wiring

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qpigeon",
                                description="quantum pigeonhole effect simulator")
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--system", help="spin-system JSON file")
    p.add_argument("--out-dir", help="directory for CSV/text artifacts")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("circuit", help="interferometer outcomes and probe report")
    c.add_argument("--particles", type=int)
    c.add_argument("--probe", help="pair like 12, 13, 23, or none")
    c.add_argument("--post", help="postselected outcome bits")

    s = sub.add_parser("spectrum", help="ancilla spectrum for a stage")
    s.add_argument("--stage", choices=list(nmr.STAGES))
    s.add_argument("--epsilon", type=float)
    s.add_argument("--linewidth", type=float, help="Lorentzian FWHM in Hz")

    t = sub.add_parser("table", help="classical vs quantum arrangement table")
    t.add_argument("--particles", type=int)

    g = sub.add_parser("grape", help="optimize a shaped pulse")
    g.add_argument("--target", help="cnot:<spin> or identity")
    g.add_argument("--duration", help="total time, e.g. 600u, 1.5ms, 0.002")
    g.add_argument("--segments", type=int)
    g.add_argument("--scales", help="comma list of rf scale factors")
    g.add_argument("--seed", type=int)
    g.add_argument("--stop-fidelity", type=float, dest="stop_fidelity")
    g.add_argument("--max-iterations", type=int, dest="max_iterations")

    v = sub.add_parser("sequence-verify", help="score a pulse sequence")
    v.add_argument("--target", help="cnot:<spin> or identity")
    v.add_argument("--sequence", dest="sequence_path",
                   help="sequence text file (default: built-in reference)")
    v.add_argument("--threshold", type=float)
    return p


def _config_from_args(args) -> RunConfig:
    file_cfg = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        if not isinstance(file_cfg, dict):
            raise ValueError("config file must hold a JSON object")

    def get(name, default, convert=None):
        return _merge(getattr(args, name, None), file_cfg, name, default, convert)

    duration = get("duration", 600e-6, _parse_duration)
    if isinstance(duration, str):
        duration = _parse_duration(duration)
    scales = get("scales", (0.95, 1.0, 1.05), _parse_scales)
    if isinstance(scales, (list, tuple)):
        scales = tuple(float(x) for x in scales)
    sequence_path = get("sequence_path", None)
    default_threshold = 1 - 1e-9 if sequence_path is None else 0.99
    return RunConfig(
        particles=int(get("particles", 3)),
        probe=str(get("probe", "none")),
        post=get("post", None),
        stage=str(get("stage", "pseudopure")),
        target=str(get("target", "cnot:1")),
        duration=float(duration),
        segments=int(get("segments", 150)),
        scales=scales,
        seed=int(get("seed", 0)),
        stop_fidelity=float(get("stop_fidelity", 0.99)),
        max_iterations=int(get("max_iterations", 2000)),
        epsilon=float(get("epsilon", 1.0)),
        linewidth=get("linewidth", None),
        threshold=float(get("threshold", default_threshold)),
        sequence_path=sequence_path,
        system_path=get("system", None),
        out_dir=get("out_dir", None),
    )


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "circuit":
            return cmd_circuit(cfg)
        if args.command == "table":
            return cmd_table(cfg)
        sys_ = _load_system(cfg.system_path)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, sys_)
        if args.command == "grape":
            return cmd_grape(cfg, sys_)
        if args.command == "sequence-verify":
            return cmd_sequence_verify(cfg, sys_)
        raise ValueError(f"unknown command {args.command!r}")
    except (ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
