"""Pipeline command-line entry point.

One subcommand per stage; each reads the previous stage's artifacts by
path, writes its own into --out, and finishes with an atomic manifest.
Exit codes: 0 success, 2 config/validation error, 3 numerical failure,
4 missing upstream artifact (the message names the producing stage).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import (active, dataio, energetics, fitting, hull, idnn, montecarlo,
               phasefield, polytope, symmetry)
from .cluster import (ClusterExpansion, build_orbit, candidate_orbit_names,
                      formation_energy, reference_model)
from .lattice import Lattice, zigzag_occupancy

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_MISSING_ARTIFACT = 4


class MissingArtifact(FileNotFoundError):
    def __init__(self, path, producer: str):
        super().__init__(
            f"required artifact {path} not found; run `orderbridge "
            f"{producer}` first")
        self.producer = producer


def _require(path, producer: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise MissingArtifact(p, producer)
    return p


def _finish(out: Path, config: dict, seed: int, artifacts: dict,
            t0: float) -> None:
    dataio.write_manifest(out / "manifest.json", config=config, seeds=seed,
                          artifacts=artifacts, wall_time_s=time.time() - t0)


def _write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) if isinstance(v, (int, float,
                     np.floating)) and not isinstance(v, bool) else str(v)
                     for v in row) + "\n")


# ------------------------------------------------------------ stages

def run_fit_ce(args) -> int:
    schema = {
        "seed": ("int", 0),
        "rows": ("int", 4), "cols": ("int", 4),
        "n_random": ("int", 200),
        "use_ga": ("bool", False),
        "ga_generations": ("int", 30),
        "ridge": ("float", 1e-8),
        "orbits": ("str", "pairs"),   # pairs | all
    }
    cfg = dataio.load_config(args.config, "fit-ce", schema)
    seed = args.seed if args.seed is not None else cfg["seed"]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()

    lat = Lattice(cfg["rows"], cfg["cols"])
    ref = reference_model(lat)
    rng = np.random.default_rng(seed)
    occs = [np.zeros(lat.n_sites), np.ones(lat.n_sites)]
    for rot in range(3):
        occs.append(zigzag_occupancy(lat, rotation=rot))
    # random mixes plus locally correlated structures (perturbed ground
    # states) so the short-range orbit columns stay independent
    for k in range(cfg["n_random"]):
        if k % 3 == 2:
            occ = zigzag_occupancy(lat, rotation=k % 3)
            flips = rng.integers(1, max(2, lat.n_sites // 4))
            idx = rng.choice(lat.n_sites, size=flips, replace=False)
            occ = occ.copy()
            occ[idx] = 1.0 - occ[idx]
        else:
            occ = (rng.random(lat.n_sites) < rng.random()).astype(np.float64)
        occs.append(occ)
    occs = np.array(occs)

    names = candidate_orbit_names()
    if cfg["orbits"] == "pairs":
        # the flip kernel consumes pair models; multi-site orbits are
        # for basis-selection studies only
        names = tuple(n for n in names
                      if not n.startswith(("t_", "q_")))
    elif cfg["orbits"] != "all":
        raise dataio.ValidationError("orbits must be 'pairs' or 'all'")
    ce_full = ClusterExpansion(lat, names, np.zeros(2 + len(names)))
    phi = np.array([ce_full.correlations(o) for o in occs])
    energies = np.array([ref.energy(o) for o in occs])
    x = occs.mean(axis=1)
    e_form = np.array([formation_energy(e, xi, 0.0, 0.0)
                       for e, xi in zip(energies, x)])
    weights = hull.hull_weights(x, e_form)

    if cfg["use_ga"]:
        ga = fitting.select_basis_ga(phi, energies, x, names,
                                     generations=cfg["ga_generations"],
                                     rng=np.random.default_rng(seed))
        kept = [n for n, m in zip(names, ga.mask) if m]
        eci_cols = np.concatenate([[0, 1],
                                   2 + np.flatnonzero(ga.mask)])
        eci = np.zeros(2 + len(names))
        eci[eci_cols] = ga.eci
        ce = ClusterExpansion(lat, names, eci)
        extra = {"ga_cv_rmse": ga.cv_rmse, "kept_orbits": kept}
    else:
        eci = fitting.fit_eci(phi, energies, weights, ridge=cfg["ridge"])
        ce = ClusterExpansion(lat, names, eci)
        extra = {}

    (out / "ce.json").write_text(ce.to_json())
    dist = hull.hull_distances(x, e_form)
    _write_csv(out / "hull.csv", ["x", "e_form", "e_hull", "distance"],
               [(xi, ei, ei - di, di)
                for xi, ei, di in zip(x, e_form, dist)])
    _finish(out, {**cfg, **extra, "seed": seed}, seed,
            {"ce": "ce.json", "hull": "hull.csv"}, t0)
    return EXIT_OK


def _float_list(v):
    return [float(s) for s in v] if isinstance(v, list) else [float(v)]


def run_mc_sample(args) -> int:
    schema = {
        "seed": ("int", 0),
        "ce": ("str", None),
        "temps": ("floats", [300.0]),
        "kappa0": ("floats", [0.2, 0.4, 0.6, 0.8]),
        "budget": ("int", 200_000),
        "rows": ("int", 8), "cols": ("int", 8),
    }
    cfg = dataio.load_config(args.config, "mc-sample", schema)
    seed = args.seed if args.seed is not None else cfg["seed"]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()

    ce_path = _require(cfg["ce"], "fit-ce")
    lat = Lattice(cfg["rows"], cfg["cols"])
    fitted = ClusterExpansion.from_json(ce_path.read_text())
    ce = ClusterExpansion(lat, fitted.orbit_names, fitted.eci)
    kappas = np.zeros((len(cfg["kappa0"]), 7))
    kappas[:, 0] = cfg["kappa0"]
    records = list(montecarlo.sweep_schedule(
        ce, lat, cfg["temps"], kappas=kappas, budget=cfg["budget"],
        seed=seed))
    dataio.write_records(out / "records.csv", records)
    _finish(out, {**cfg, "seed": seed}, seed, {"records": "records.csv"}, t0)
    return EXIT_OK


def run_train_idnn(args) -> int:
    schema = {
        "seed": ("int", 0),
        "records": ("str", None),
        "epochs": ("int", 2000),
        "width": ("int", 16),
        "n_hidden": ("int", 2),
        "lr": ("float", 0.1),
    }
    cfg = dataio.load_config(args.config, "train-idnn", schema)
    seed = args.seed if args.seed is not None else cfg["seed"]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()

    rec_path = _require(cfg["records"], "mc-sample")
    arrays = dataio.records_arrays(dataio.read_records(rec_path))
    hp = idnn.Hyperparams(n_hidden=cfg["n_hidden"], width=cfg["width"],
                          lr=cfg["lr"], epochs=cfg["epochs"], seed=seed)
    model, history = idnn.train(arrays["eta"], arrays["mu"], hp)
    (out / "model.json").write_text(model.to_json())
    _write_csv(out / "history.csv", ["epoch", "loss"],
               list(enumerate(history)))
    _finish(out, {**cfg, "seed": seed}, seed,
            {"model": "model.json", "history": "history.csv"}, t0)
    return EXIT_OK


def run_active_learn(args) -> int:
    schema = {
        "seed": ("int", 0),
        "iters": ("int", 25),
        "temps": ("floats", [300.0]),
        "budget": ("int", 60_000),
        "rows": ("int", 8), "cols": ("int", 8),
        "n_global": ("int", 30), "n_boundary": ("int", 10),
        "n_wells": ("int", 24), "n_ends": ("int", 8), "n_path": ("int", 12),
        "n_exploit": ("int", 20),
    }
    cfg = dataio.load_config(args.config, "active-learn", schema)
    seed = args.seed if args.seed is not None else cfg["seed"]
    iters = args.iters if args.iters is not None else cfg["iters"]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()

    al_cfg = active.ALConfig(
        t_list=tuple(cfg["temps"]), iterations=iters,
        counts=active.ExploreCounts(cfg["n_global"], cfg["n_boundary"],
                                    cfg["n_wells"], cfg["n_ends"],
                                    cfg["n_path"]),
        n_exploit=cfg["n_exploit"], mc_budget=cfg["budget"],
        lattice_rows=cfg["rows"], lattice_cols=cfg["cols"], seed=seed,
        out_dir=str(out))
    best, state = active.active_learning_loop(al_cfg)
    (out / "model.json").write_text(best.to_json())
    _finish(out, {**cfg, "seed": seed, "iters": iters}, seed,
            {"model": "model.json", "dataset": "dataset.csv",
             "metrics": "metrics.json"}, t0)
    return EXIT_OK


def run_calibrate_chi(args) -> int:
    schema = {
        "seed": ("int", 0),
        "model": ("str", None),
        "gamma": ("float", 30.9),
        "epsilon": ("float", 0.1),
        "x_matrix": ("float", 0.55),
        "chi_lo": ("float", 1e-4), "chi_hi": ("float", 1e-1),
        "grid_n": ("int", 5),
        "relax_steps": ("int", 1500),
    }
    cfg = dataio.load_config(args.config, "calibrate-chi", schema)
    seed = args.seed if args.seed is not None else cfg["seed"]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()

    model_path = _require(cfg["model"], "train-idnn")
    model = idnn.IDNNModel.from_json(model_path.read_text())
    grid = np.geomspace(cfg["chi_lo"], cfg["chi_hi"], cfg["grid_n"])
    cal = phasefield.calibrate_chi(
        cfg["gamma"], model, chi0_grid=grid, chi_grid=grid,
        epsilon=cfg["epsilon"], x_matrix=cfg["x_matrix"],
        n_steps=cfg["relax_steps"])
    dataio.write_manifest(out / "chi.json",
                          config={"gamma": cfg["gamma"]}, seeds=seed,
                          extra={"chi0": cal.chi0, "chi": cal.chi,
                                 "beta": cal.beta, "beta_hat": cal.beta_hat,
                                 "residual": cal.residual,
                                 "feasible": cal.feasible})
    _finish(out, {**cfg, "seed": seed}, seed, {"chi": "chi.json"}, t0)
    return EXIT_OK


def run_phase_field(args) -> int:
    schema = {
        "seed": ("int", 0),
        "model": ("str", None),
        "chi_file": ("str", ""),
        "n": ("int", 64), "dx": ("float", 1.0),
        "temp": ("float", 300.0),
        "x0": ("float", 0.5425), "amp": ("float", 0.05),
        "eta_amp": ("float", 0.01),
        "chi0": ("float", 1e-3), "chi": ("float", 1e-3),
        "dt": ("float", 1e-4), "steps": ("int", 400),
        "snap_every": ("int", 100),
        "c_rates": ("floats", []),
        "segment_s": ("float", 0.0),
    }
    cfg = dataio.load_config(args.config, "phase-field", schema)
    seed = args.seed if args.seed is not None else cfg["seed"]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()

    model_path = _require(cfg["model"], "train-idnn")
    model = idnn.IDNNModel.from_json(model_path.read_text())
    chi0, chi = cfg["chi0"], cfg["chi"]
    if cfg["chi_file"]:
        doc = dataio.read_manifest(_require(cfg["chi_file"], "calibrate-chi"))
        chi0, chi = doc["extra"]["chi0"], doc["extra"]["chi"]
    schedule = None
    if cfg["c_rates"]:
        durations = [cfg["segment_s"]] * len(cfg["c_rates"])
        schedule = phasefield.schedule_from_c_rates(
            cfg["c_rates"], durations, cfg["n"], cfg["dx"])
    sim_cfg = phasefield.SimConfig(
        n=cfg["n"], dx=cfg["dx"], temperature=cfg["temp"], x0=cfg["x0"],
        amp=cfg["amp"], eta_amp=cfg["eta_amp"], chi0=chi0, chi=chi,
        dt=cfg["dt"], n_steps=cfg["steps"], snap_every=cfg["snap_every"],
        seed=seed, schedule=schedule)
    res = phasefield.simulate(model, sim_cfg)
    arts = {"series": "series.csv"}
    _write_csv(out / "series.csv", ["t", "mean_x", "energy", "domains"],
               zip(res.times, res.mean_x, res.energy, res.domains))
    for k, snap in enumerate(res.snapshots):
        dataio.write_grid(out / f"x_{k:03d}.bin", snap.x)
        dataio.write_grid(out / f"order_{k:03d}.bin",
                          (snap.eta ** 2).sum(axis=0))
        arts[f"x_{k:03d}"] = f"x_{k:03d}.bin"
    _finish(out, {**cfg, "seed": seed}, seed, arts, t0)
    return EXIT_OK


def run_nucleation(args) -> int:
    schema = {
        "seed": ("int", 0),
        "model": ("str", None),
        "gamma": ("float", 30.9),        # mJ/m^2
        "x_lo": ("float", 0.4), "x_hi": ("float", 0.6),
        "n_x": ("int", 21),
        "v_lo": ("float", -0.05), "v_hi": ("float", 0.05),
        "n_v": ("int", 11),
        "temp": ("float", 300.0),
        "dt": ("float", 1.0),
        "diffusivity": ("float", 1e-14),
    }
    cfg = dataio.load_config(args.config, "nucleation", schema)
    seed = args.seed if args.seed is not None else cfg["seed"]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()

    model_path = _require(cfg["model"], "train-idnn")
    model = idnn.IDNNModel.from_json(model_path.read_text())
    g_ord, g_dis = energetics.free_energy_paths(model)
    gamma = cfg["gamma"] * 1e-3
    rows = []
    for xm in np.linspace(cfg["x_lo"], cfg["x_hi"], cfg["n_x"]):
        tang = energetics.driving_force(g_ord, g_dis, xm)
        dgv = energetics.convert_energy_density(tang.delta_g_v)
        for v in np.linspace(cfg["v_lo"], cfg["v_hi"], cfg["n_v"]):
            if tang.nucleating and dgv > 0:
                inp = energetics.CNTInput(
                    gamma=gamma, delta_g_v=dgv, temperature=cfg["temp"],
                    diffusivity=cfg["diffusivity"], x0=xm, voltage=v,
                    delta_x=tang.x_nuc - xm, dt=cfg["dt"])
                r = energetics.nucleation_rate(inp)
                rows.append((v, xm, dgv, r.r_star, r.delta_g_star,
                             r.j_star, r.p_n))
            else:
                rows.append((v, xm, max(dgv, 0.0), math.inf, math.inf,
                             0.0, 0.0))
    _write_csv(out / "cnt_map.csv",
               ["v", "x_mat", "dg_v", "r_star", "dg_star", "j_star", "p_n"],
               rows)
    _finish(out, {**cfg, "seed": seed}, seed, {"cnt_map": "cnt_map.csv"}, t0)
    return EXIT_OK


def run_phase_diagram(args) -> int:
    schema = {
        "seed": ("int", 0),
        "model": ("str", None),
        "temp": ("float", 300.0),
        "n_grid": ("int", 101),
        "jump_tol": ("float", 0.05),
        "slice_n": ("int", 65),
        "slice_x": ("float", 0.5),
    }
    cfg = dataio.load_config(args.config, "phase-diagram", schema)
    seed = args.seed if args.seed is not None else cfg["seed"]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()

    model_path = _require(cfg["model"], "train-idnn")
    model = idnn.IDNNModel.from_json(model_path.read_text())

    xs = np.linspace(0.0, 1.0, cfg["n_grid"])
    path = energetics.lowest_path(model, xs, jump_tol=cfg["jump_tol"])
    _write_csv(out / "path.csv",
               ["eta0", "g_min"] + [f"eta{k}" for k in range(1, 7)],
               [(e0, g, *em) for e0, g, em in
                zip(path.eta0, path.g_min, path.eta_min)])

    def g_dis(x):
        row = np.zeros((1, 7))
        row[0, 0] = x
        return float(model.free_energy(row)[0])

    b = energetics.phase_boundaries_1d(g_dis, (0.02, 0.98),
                                       n_grid=cfg["n_grid"] * 10 + 1)
    rows = [(cfg["temp"], "binodal", a) for a, _ in b.binodal]
    rows += [(cfg["temp"], "binodal", bb) for _, bb in b.binodal]
    rows += [(cfg["temp"], "spinodal", s) for s in b.spinodal]
    rows += [(cfg["temp"], "discontinuity", d) for d in path.discontinuities]
    _write_csv(out / "boundaries.csv", ["t", "kind", "x"], rows)

    # Free-energy slice grids, so plotting tools never evaluate the
    # model themselves.  Rows sweep the first named axis, cols the
    # second; axis ranges travel in slices.json next to the grids.
    ns = cfg["slice_n"]
    comp_ax = np.linspace(0.0, 1.0, ns)
    var_ax = np.linspace(-0.5, 0.5, ns)
    pts = np.zeros((ns * ns, 7))
    pts[:, 0] = np.repeat(comp_ax, ns)
    pts[:, 1] = np.tile(var_ax, ns)
    dataio.write_grid(out / "slice_eta01.bin",
                      model.free_energy(pts).reshape(ns, ns))
    pts = np.zeros((ns * ns, 7))
    pts[:, 0] = cfg["slice_x"]
    pts[:, 1] = np.repeat(var_ax, ns)
    pts[:, 2] = np.tile(var_ax, ns)
    dataio.write_grid(out / "slice_eta12.bin",
                      model.free_energy(pts).reshape(ns, ns))
    slices = {"slices": [
        {"name": "eta0-eta1", "grid": "slice_eta01.bin",
         "rows": {"label": "eta0", "min": 0.0, "max": 1.0},
         "cols": {"label": "eta1", "min": -0.5, "max": 0.5}},
        {"name": "eta1-eta2", "grid": "slice_eta12.bin",
         "rows": {"label": "eta1", "min": -0.5, "max": 0.5},
         "cols": {"label": "eta2", "min": -0.5, "max": 0.5}},
    ]}
    (out / "slices.json").write_text(json.dumps(slices, indent=1) + "\n",
                                     encoding="utf-8")

    _finish(out, {**cfg, "seed": seed}, seed,
            {"path": "path.csv", "boundaries": "boundaries.csv",
             "slices": "slices.json", "slice_eta01": "slice_eta01.bin",
             "slice_eta12": "slice_eta12.bin"}, t0)
    return EXIT_OK


# ------------------------------------------------------------- main

_RUNNERS = {
    "fit-ce": run_fit_ce,
    "mc-sample": run_mc_sample,
    "train-idnn": run_train_idnn,
    "active-learn": run_active_learn,
    "calibrate-chi": run_calibrate_chi,
    "phase-field": run_phase_field,
    "nucleation": run_nucleation,
    "phase-diagram": run_phase_diagram,
}

_NUMERICAL_ERRORS = (idnn.DivergenceError, phasefield.SolverAbort,
                     fitting.SingularFitError, polytope.TrajectoryError,
                     FloatingPointError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orderbridge",
        description="order-disorder scale-bridging pipeline")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="INI config; section name = subcommand")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=None)
        if name == "active-learn":
            p.add_argument("--iters", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        try:
            import numba
            numba.set_num_threads(args.threads)
        except (ImportError, ValueError):
            pass
    try:
        return _RUNNERS[args.command](args)
    except MissingArtifact as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_ARTIFACT
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (dataio.ValidationError, ValueError, KeyError, OSError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
