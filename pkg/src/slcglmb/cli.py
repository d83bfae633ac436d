"""Command-line harness: ``slcglmb {simulate,track,verify,correlate,compare}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import io as sio
from .errors import ConfigError, TrackingError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("slcglmb")


def _default_config() -> Path:
    return Path(str(resources.files("slcglmb") / "scenarios" / "default.toml"))


def _load(args):
    from .sim import load_config

    cfg = load_config(args.config or _default_config())
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _header(cfg, args, **extra):
    lines = [f"seed={cfg.rng_seed}", f"config={Path(args.config).name if args.config else 'default.toml'}"]
    lines += [f"{k}={v}" for k, v in extra.items()]
    return lines


def _filters(args):
    return ["glmb", "slc"] if args.filter == "both" else [args.filter]


def cmd_simulate(args, out: Path) -> int:
    from .sim import generate_scenario

    cfg = _load(args)
    scans = generate_scenario(cfg)
    n, m = cfg.state_dim, cfg.sensor.meas_dim
    truth = [[s.k, str(e.label), *e.kinematic] for s in scans for e in s.truth]
    sio.write_csv(out / "truth.csv", _header(cfg, args), ["step", "label", *[f"x{i}" for i in range(n)]], truth)
    meas = [[s.k, j + 1, *z] for s in scans for j, z in enumerate(s.measurements)]
    sio.write_csv(out / "measurements.csv", _header(cfg, args), ["step", "index", *[f"z{i}" for i in range(m)]], meas)
    print(f"wrote {len(scans)} scans to {out}")
    return EXIT_OK


def cmd_track(args, out: Path) -> int:
    from .sim import generate_scenario, run_filter

    cfg = _load(args)
    scans = generate_scenario(cfg)
    n = cfg.state_dim
    for which in _filters(args):
        results = run_filter(cfg, scans, which)
        rows, diag = [], []
        for r in results[1:]:
            if r.labels:
                rows += [[r.k, str(l), *r.states[l], r.ospa] for l in r.labels]
            else:
                rows.append([r.k, "", *[""] * n, r.ospa])
            diag.append([r.k, r.residual_predict, r.residual_update, r.survivor_residual, r.n_hypotheses, r.ospa])
        hdr = _header(cfg, args, filter=which)
        sio.write_csv(out / f"tracks_{which}.csv", hdr, ["step", "label", *[f"x{i}" for i in range(n)], "ospa"], rows)
        sio.write_csv(
            out / f"diagnostics_{which}.csv", hdr,
            ["step", "residual_predict", "residual_update", "survivor_residual", "hypotheses", "ospa"], diag,
        )
        if args.snapshots:
            snap = out / "snapshots"
            snap.mkdir(exist_ok=True)
            to_json = sio.slc_to_json if which == "slc" else sio.glmb_to_json
            for r in results:
                sio.dump_json(snap / f"{which}_step{r.k:03d}.json", to_json(r.density, r.k))
        print(f"{which}: {len(results) - 1} steps, final OSPA {results[-1].ospa if len(results) > 1 else 0.0:.4f}")
    return EXIT_OK


def cmd_compare(args, out: Path) -> int:
    from .sim import equivalence_gap, generate_scenario, run_filter

    cfg = _load(args)
    scans = generate_scenario(cfg)
    slc = run_filter(cfg, scans, "slc")
    glmb = run_filter(cfg, scans, "glmb")
    rows, worst, worst_state = [], 0.0, 0.0
    for a, b in zip(slc, glmb):
        dw, ds = equivalence_gap(a.density, b.density)
        if a.labels == b.labels:
            dx = max((float(np.max(np.abs(a.states[l] - b.states[l]))) for l in a.labels), default=0.0)
        else:
            dx = np.inf
        rows.append([a.k, dw, ds, dx])
        worst = max(worst, dw, ds)
        worst_state = max(worst_state, dx)
    sio.write_csv(out / "compare.csv", _header(cfg, args), ["step", "weight_gap", "spatial_gap", "estimate_gap"], rows)
    # mode search iterates to 1e-9, so estimates get a looser tolerance than the densities
    ok = worst <= 1e-10 and worst_state <= 1e-6
    print(f"max density gap {worst:.3e}, estimate gap {worst_state:.3e}: {'equivalent' if ok else 'MISMATCH'}")
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_correlate(args, out: Path) -> int:
    from .correlation import _fd_table, correlation_report, default_probe_grid, fcd_table, marginalize
    from .errors import UnsupportedDensity
    from .labels import LabeledState
    from .sim import generate_scenario, run_filter
    from .slc import slc_birth_density

    cfg = _load(args)
    if args.step:
        scans = generate_scenario(cfg)[: args.step]
        d = run_filter(cfg, scans, "slc")[-1].density
    else:
        model = cfg.birth_model(1)
        if model is None:
            raise ConfigError("birth", "no birth model to analyse")
        d = slc_birth_density(model)
    if len(d.label_universe) < 2:
        raise ConfigError("birth", "need at least two labels for a pair f.c.d.")
    l1, l2 = d.label_universe[:2]
    if not 0 <= args.axis < cfg.state_dim:
        raise ConfigError("--axis", f"must lie in [0, {cfg.state_dim})")
    dm = marginalize(d, args.axis)
    xs1, xs2 = default_probe_grid(dm, l1), default_probe_grid(dm, l2)
    try:
        table = fcd_table(dm, l1, l2, xs1, xs2)
    except UnsupportedDensity:
        table = _fd_table(dm, l1, l2, xs1, xs2)
    rows = [[float(a[0]), float(b[0]), table[i, j]] for i, a in enumerate(xs1) for j, b in enumerate(xs2)]
    hdr = _header(cfg, args, labels=f"{l1} {l2}", axis=args.axis)
    sio.write_csv(out / "fcd.csv", hdr, ["x1", "x2", "fcd"], rows)
    i, j = np.unravel_index(np.argmax(np.abs(table)), table.shape)
    rep = correlation_report(dm, LabeledState(tuple(xs1[i]), l1), LabeledState(tuple(xs2[j]), l2), (xs1, xs2))
    (out / "correlation.json").write_text(rep.to_json() + "\n", encoding="utf-8")
    print(f"independence gap {rep.independence_gap:.6e} for labels {l1}, {l2}")
    return EXIT_OK


def cmd_verify(args, out: Path) -> int:
    """Small oracle checks: a closed-form update against brute-force Bayes."""
    from .glmb import GlmbDensity, LmbBirth, glmb_measurement_update, glmb_time_update
    from .labels import Label
    from .models import MotionModel, SensorModel, SpatialPdf
    from .oracle import DiscreteScene, bayes_update_bruteforce, discretize, gaussian_likelihood, set_integral, tv_distance
    from .sim import make_rng
    from .slc import from_glmb, slc_measurement_update, to_glmb

    seed = args.seed if args.seed is not None else (_load(args).rng_seed if args.config else 0)
    rng = make_rng(seed)
    l1, l2 = Label(1, 1), Label(1, 2)
    motion = MotionModel(np.eye(1), np.eye(1) * 0.5, 0.95)
    sensor = SensorModel(np.eye(1), np.eye(1), 0.8, 1.0, np.array([[-15.0, 15.0]]))
    birth = LmbBirth({l1: 0.7, l2: 0.6}, {l1: SpatialPdf.gaussian([-2.0], [[1.0]]), l2: SpatialPdf.gaussian([2.5], [[1.5]])})
    pred = glmb_time_update(GlmbDensity.empty(), motion, birth)
    Z = [np.array([v]) for v in rng.uniform(-4, 4, size=int(rng.integers(0, 3)))]
    post = glmb_measurement_update(pred, sensor, Z)
    scene = DiscreteScene.uniform(-15.0, 15.0, 401, (l1, l2))
    prior_d = discretize(pred, scene)
    brute = bayes_update_bruteforce(prior_d, gaussian_likelihood(sensor), Z, scene)
    checks = [
        ("prior_set_integral", abs(set_integral(prior_d, scene) - 1.0), 1e-8),
        ("bayes_tv", tv_distance(discretize(post, scene), brute), 1e-8),
        ("slc_vs_glmb_update", max(abs(a - b) for a, b in _pairs(to_glmb(slc_measurement_update(from_glmb(pred), sensor, Z)), post)), 1e-10),
    ]
    rows = [[name, val, tol, "pass" if val <= tol else "fail"] for name, val, tol in checks]
    sio.write_csv(out / "verify.csv", [f"seed={seed}", f"measurements={len(Z)}"], ["check", "value", "tolerance", "result"], rows)
    for r in rows:
        print(f"{r[3].upper()} {r[0]}: {r[1]:.3e} (tol {r[2]:.0e})")
    return EXIT_OK if all(r[3] == "pass" for r in rows) else EXIT_NUMERIC


def _pairs(a, b):
    keys = set(a.weights) | set(b.weights)
    return [(a.weights.get(k, 0.0), b.weights.get(k, 0.0)) for k in keys]


COMMANDS = {
    "simulate": cmd_simulate,
    "track": cmd_track,
    "verify": cmd_verify,
    "correlate": cmd_correlate,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML scenario (default: bundled default.toml)")
    common.add_argument("--seed", type=int, metavar="N", help="override the scenario seed")
    common.add_argument("--filter", choices=["glmb", "slc", "both"], default="slc")
    common.add_argument("--out", metavar="DIR", default="out")
    common.add_argument("--snapshots", action="store_true", help="write one JSON density per step")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="slcglmb", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "correlate":
            sp.add_argument("--axis", type=int, default=0, help="state coordinate for the f.c.d. table")
            sp.add_argument("--step", type=int, default=0, help="use the filtered density after this step (0: birth)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (TrackingError, FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
