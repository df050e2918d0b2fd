"""Command-line batch runner.

    usqed <command> --config cfg.json [--out path] [--format csv|json] [--threads N]

Every command reads one JSON object, validates it, and writes a table.  CSV
output starts with a ``#`` comment carrying the toolkit version and the
SHA-256 of the canonical config, so identical configs give identical bytes.
Exit codes: 0 success, 2 invalid config, 3 numerical failure (a JSON
diagnostic is written to stderr).
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor

import jsonschema
import numpy as np

from . import __version__

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# ---------------------------------------------------------------------------
# schemas

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_INT1 = {"type": "integer", "minimum": 1}
_GRID = {
    "oneOf": [
        {"type": "array", "items": _NUM, "minItems": 1},
        {
            "type": "object",
            "properties": {"start": _NUM, "stop": _NUM, "num": _INT1},
            "required": ["start", "stop", "num"],
            "additionalProperties": False,
        },
    ]
}
_RABI = {
    "type": "object",
    "properties": {"omega": _POS, "Omega": _NONNEG, "g": _NONNEG},
    "required": ["omega", "Omega", "g"],
    "additionalProperties": False,
}
_COMMON = {"seed": {"type": "integer"}, "out": {"type": "string"}, "format": {"enum": ["csv", "json"]},
           "reference": {"type": "string"}}
_BATH = {
    "type": "object",
    "properties": {
        "coupling": {"enum": ["cavity", "spin"]},
        "density_kind": {"enum": ["flat", "sqrt", "ohmic"]},
        "gamma0": _NONNEG,
        "omega_ref": _POS,
        "cluster_tol": _NONNEG,
    },
    "additionalProperties": False,
}


def _schema(props: dict, required: list) -> dict:
    return {"type": "object", "properties": {**props, **_COMMON}, "required": required,
            "additionalProperties": False}


SCHEMAS = {
    "spectrum": _schema({
        "model": _RABI,
        "methods": {"type": "array", "minItems": 1, "uniqueItems": True,
                    "items": {"enum": ["exact", "jc", "bs", "grwa", "braak", "variational"]}},
        "n_levels": _INT1,
        "tol": _POS,
        "cutoff": _INT1,
        "squeezing": {"type": "boolean"},
    }, ["model", "methods"]),
    "validity-map": _schema({
        "omega": _POS,
        "g_grid": _GRID,
        "Omega_grid": _GRID,
        "methods": {"type": "array", "minItems": 1, "uniqueItems": True,
                    "items": {"enum": ["jc", "bs", "grwa"]}},
        "n_levels": _INT1,
        "tol": _POS,
    }, ["omega", "g_grid", "Omega_grid"]),
    "steady": _schema({
        "omega": _POS,
        "Omega": _NONNEG,
        "g_grid": _GRID,
        "gamma": _NONNEG,
        "kappa": _NONNEG,
        "cutoff": _INT1,
        "n_levels": _INT1,
    }, ["omega", "Omega", "g_grid"]),
    "g2": _schema({
        "model": _RABI,
        "cutoff": _INT1,
        "n_levels": _INT1,
        "bath": _BATH,
        "drive": {
            "type": "object",
            "properties": {"F": _NONNEG, "omega_d": _POS, "phi": _NUM,
                           "transition": {"type": "array", "items": {"type": "integer", "minimum": 0},
                                          "minItems": 2, "maxItems": 2}},
            "required": ["F"],
            "additionalProperties": False,
        },
        "N_F": _INT1,
        "tau_grid": _GRID,
        "omega_grid": _GRID,
    }, ["model", "drive"]),
    "floquet": _schema({
        "model": _RABI,
        "cutoff": _INT1,
        "n_levels": _INT1,
        "bath": _BATH,
        "F": _NONNEG,
        "phi": _NUM,
        "omega_d_grid": _GRID,
        "N_F": _INT1,
        "observables": {"type": "array", "items": {"enum": ["photons", "flux", "sz"]}, "uniqueItems": True},
    }, ["model", "F", "omega_d_grid"]),
    "gauge-scan": _schema({
        "omega": _POS,
        "Omega": _NONNEG,
        "g_grid": _GRID,
        "orders": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "n_levels": _INT1,
        "cutoff": _INT1,
        "cutoff_max": _INT1,
        "include_full": {"type": "boolean"},
        "tol": _POS,
    }, ["omega", "Omega", "g_grid"]),
}


class Table:
    def __init__(self, columns, rows):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]


def _grid(spec) -> np.ndarray:
    if isinstance(spec, dict):
        return np.linspace(spec["start"], spec["stop"], spec["num"])
    return np.asarray(spec, dtype=float)


def _pmap(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))  # map keeps input order


# ---------------------------------------------------------------------------
# commands

def _jc_parity(label) -> int:
    n = label[0]
    return -1 if n % 2 == 0 else 1


def cmd_spectrum(cfg: dict, threads: int) -> Table:
    from .qops import RabiParams
    from .spectra import (bloch_siegert_spectrum, braak_spectrum, exact_spectrum, grwa_spectrum, jc_spectrum,
                          variational_polaron_ground)

    m = cfg["model"]
    p = RabiParams(m["omega"], m["Omega"], m["g"])
    n = cfg.get("n_levels", 8)
    tol = cfg.get("tol", 1e-10)
    N0 = cfg.get("cutoff", 20)

    def run(method):
        rows = []
        if method == "exact":
            cs = exact_spectrum(p, tol=tol, N_start=N0, n_levels=n)
            for i, (e, s) in enumerate(zip(cs.levels, cs.parity)):
                rows.append([i, int(s), float(e), method, cs.cutoff_used])
        elif method in ("jc", "bs"):
            fn = jc_spectrum if method == "jc" else bloch_siegert_spectrum
            sp = fn(p, n_max=n)
            for i in range(n):
                rows.append([i, _jc_parity(sp.labels[i]), float(sp.levels[i]), method, 0])
        elif method == "grwa":
            sp = grwa_spectrum(p, n_levels=n)
            N = int(max(40, 4 * (2 * p.g / p.omega) ** 2 + 40))
            for i in range(n):
                rows.append([i, _jc_parity(sp.labels[i]), float(sp.levels[i]), method, N])
        elif method == "braak":
            E_max = p.omega * n
            while True:
                bs = braak_spectrum(p, E_max)
                if len(bs.levels) >= n:
                    break
                E_max += p.omega * n
            for i in range(n):
                rows.append([i, int(bs.parity[i]), float(bs.levels[i]), method, 0])
        else:
            r = variational_polaron_ground(p, cfg.get("squeezing", False))
            rows.append([0, -1, float(r.energy), method, len(r.state) // 2])
        return rows

    out = _pmap(run, cfg["methods"], threads)
    return Table(["level_index", "parity", "energy", "method", "cutoff_used"], [r for rs in out for r in rs])


def cmd_validity_map(cfg: dict, threads: int) -> Table:
    from .qops import RabiParams
    from .spectra import bloch_siegert_spectrum, exact_spectrum, grwa_spectrum, jc_spectrum, spectrum_error

    w = cfg["omega"]
    n = cfg.get("n_levels", 4)
    methods = cfg.get("methods", ["jc", "bs", "grwa"])
    points = [(float(g), float(W)) for g in _grid(cfg["g_grid"]) for W in _grid(cfg["Omega_grid"])]

    def run(pt):
        g, W = pt
        p = RabiParams(w, W, g)
        ex = exact_spectrum(p, tol=cfg.get("tol", 1e-10), n_levels=n).levels
        rows = []
        for m in methods:
            if m == "jc":
                lv = jc_spectrum(p, n_max=n).levels
            elif m == "bs":
                import warnings
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    lv = bloch_siegert_spectrum(p, n_max=n).levels
            else:
                lv = grwa_spectrum(p, n_levels=n).levels
            rows.append([g, W, m, spectrum_error(lv, ex, n)])
        return rows

    out = _pmap(run, points, threads)
    return Table(["g", "Omega", "method", "max_error"], [r for rs in out for r in rs])


def cmd_steady(cfg: dict, threads: int) -> Table:
    from .numkern import eig_hermitian
    from .opensys import BathSpec, build_lindbladian, photon_flux, steady_state, xplus_operator
    from .qops import HilbertSpec, RabiParams, build_algebra, build_hamiltonian

    w, W = cfg["omega"], cfg["Omega"]
    gam = cfg.get("gamma", w / 60)
    kap = cfg.get("kappa", w / 60)
    N = cfg.get("cutoff", 16)
    nl = cfg.get("n_levels", 10)

    def run(g):
        space = HilbertSpec(N)
        H = build_hamiltonian(RabiParams(w, W, float(g)), space)
        alg = build_algebra(space)
        es = eig_hermitian(H)
        X, S = (alg.a[0] + alg.adag[0]).matrix, alg.sx[0].matrix
        baths = [BathSpec(X, gamma0=kap), BathSpec(S, gamma0=gam)]
        Ld = build_lindbladian("dressed", es, baths, n_levels=nl, secular_check=False)
        rd = Ld.to_lab(steady_state(Ld))
        Lp = build_lindbladian("phenomenological", H, kappa=kap, gamma=gam)
        rp = steady_state(Lp)
        num = alg.num().matrix
        gs = es.vectors[:, 0]
        nd = float(np.real(np.trace(num @ rd)))
        npn = float(np.real(np.trace(num @ rp)))
        flux = photon_flux(rd, xplus_operator(es, X))
        fd = float(np.real(gs.conj() @ rd @ gs))
        fp = float(np.real(gs.conj() @ rp @ gs))
        return [float(g), nd, npn, npn - nd, fd, fp, flux]

    rows = _pmap(run, _grid(cfg["g_grid"]), threads)
    return Table(["g", "photons_dressed", "photons_phenomenological", "excess", "fidelity_dressed",
                  "fidelity_phenomenological", "flux_dressed"], rows)


def _driven_setup(cfg: dict):
    from .numkern import eig_hermitian
    from .opensys import BathSpec, build_lindbladian, xplus_operator
    from .qops import HilbertSpec, RabiParams, build_algebra, build_hamiltonian

    m = cfg["model"]
    space = HilbertSpec(cfg.get("cutoff", 30))
    H = build_hamiltonian(RabiParams(m["omega"], m["Omega"], m["g"]), space)
    alg = build_algebra(space)
    X = (alg.a[0] + alg.adag[0]).matrix
    b = cfg.get("bath", {})
    A = X if b.get("coupling", "cavity") == "cavity" else alg.sx[0].matrix
    bath = BathSpec(A, b.get("density_kind", "flat"), b.get("gamma0", 0.01), b.get("omega_ref", 1.0),
                    cluster_tol=b.get("cluster_tol", 0.0))
    nl = cfg.get("n_levels", 6)
    es = eig_hermitian(H).truncate(nl)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        L0 = build_lindbladian("dressed", es, [bath], n_levels=nl)
    Op = xplus_operator(es, X, "dressed")
    return es, L0, X, Op, alg


def cmd_g2(cfg: dict, threads: int) -> Table:
    from .floquet import DriveSpec, build_floquet_liouvillian, floquet_emission_spectrum, floquet_g2

    es, L0, X, Op, _ = _driven_setup(cfg)
    d = cfg["drive"]
    if "omega_d" in d:
        wd = d["omega_d"]
    else:
        i, j = d.get("transition", [0, 1])
        wd = float(es.values[j] - es.values[i])
    FL = build_floquet_liouvillian(L0, DriveSpec(d["F"], wd, d.get("phi", 0.0), X), cfg.get("N_F", 10))
    tau = _grid(cfg.get("tau_grid", [0.0]))
    wgrid = _grid(cfg.get("omega_grid", {"start": 0.0, "stop": 2 * wd, "num": 5}))
    g2 = floquet_g2(FL, Op, tau)
    spec = floquet_emission_spectrum(FL, Op, wgrid)
    rows = [["omega_d", 0.0, wd]]
    rows += [["g2_tau", float(t), float(v)] for t, v in zip(tau, g2)]
    rows += [["S", float(x), float(v)] for x, v in zip(wgrid, spec.S)]
    rows += [["elastic", float(k * wd), float(v)] for k, v in sorted(spec.lines.items()) if abs(v) > 1e-14]
    return Table(["quantity", "x", "value"], rows)


def cmd_floquet(cfg: dict, threads: int) -> Table:
    from .floquet import DriveSpec, build_floquet_liouvillian, floquet_steady_state
    from .opensys import photon_flux

    es, L0, X, Op, alg = _driven_setup(cfg)
    obs = cfg.get("observables", ["photons", "flux"])
    ops = {"photons": L0.to_working(alg.num().matrix), "sz": L0.to_working(alg.sz[0].matrix)}
    N_F = cfg.get("N_F", 10)

    def run(wd):
        FL = build_floquet_liouvillian(L0, DriveSpec(cfg["F"], float(wd), cfg.get("phi", 0.0), X), N_F)
        vals = FL.modes.values
        order = np.lexsort((np.imag(vals), -np.real(vals)))
        rows = [[float(wd), "eigenvalue", str(k), float(np.real(vals[i])), float(np.imag(vals[i]))]
                for k, i in enumerate(order)]
        rho = floquet_steady_state(FL).average
        for name in obs:
            v = photon_flux(rho, Op) if name == "flux" else float(np.real(np.trace(ops[name] @ rho)))
            rows.append([float(wd), "observable", name, float(v), 0.0])
        return rows

    out = _pmap(run, _grid(cfg["omega_d_grid"]), threads)
    return Table(["omega_d", "kind", "name", "real", "imag"], [r for rs in out for r in rs])


def cmd_gauge_scan(cfg: dict, threads: int) -> Table:
    from .gauge import GaugeFamily, gauge_levels, paired_deviation
    from .qops import RabiParams

    orders = cfg.get("orders", [2, 4, 6])
    nl = cfg.get("n_levels", 6)
    N0 = cfg.get("cutoff", 60)
    Nmax = cfg.get("cutoff_max", 200)
    tol = cfg.get("tol", 1e-8)
    variants = ([("coulomb_full", None)] if cfg.get("include_full", True) else []) + \
        [("coulomb_taylor", k) for k in orders]

    def run(g):
        p = RabiParams(cfg["omega"], cfg["Omega"], float(g))
        ref = gauge_levels(GaugeFamily(p, "dipole", N0), nl, tol, cutoff_max=Nmax)
        rows = []
        for var, k in variants:
            lv = gauge_levels(GaugeFamily(p, var, N0, k), nl, tol, cutoff_max=Nmax)
            ok = ref.converged and lv.converged
            dev = paired_deviation(lv, ref) if ok else float("nan")
            rows.append([float(g), var, -1 if k is None else k, dev, int(ok), lv.cutoff, lv.n_excluded])
        return rows

    out = _pmap(run, _grid(cfg["g_grid"]), threads)
    return Table(["g", "variant", "order", "deviation", "converged", "cutoff", "n_excluded"],
                 [r for rs in out for r in rs])


COMMANDS = {
    "spectrum": cmd_spectrum,
    "validity-map": cmd_validity_map,
    "steady": cmd_steady,
    "g2": cmd_g2,
    "floquet": cmd_floquet,
    "gauge-scan": cmd_gauge_scan,
}


# ---------------------------------------------------------------------------
# output

def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12e" % v
    return str(v)


def render_csv(table: Table, command: str, cfg: dict) -> str:
    buf = io.StringIO(newline="")
    buf.write(f"# usqed {__version__} command={command} config_sha256={config_hash(cfg)}\n")
    buf.write(",".join(table.columns) + "\n")
    for r in table.rows:
        buf.write(",".join(_fmt(v) for v in r) + "\n")
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else None
    return v


def render_json(table: Table, command: str, cfg: dict) -> str:
    doc = {
        "version": __version__,
        "command": command,
        "config_sha256": config_hash(cfg),
        "columns": table.columns,
        "rows": [[_json_value(v) for v in r] for r in table.rows],
    }
    return json.dumps(doc, indent=1) + "\n"


def run(command: str, cfg: dict, threads: int = 1) -> Table:
    jsonschema.validate(cfg, SCHEMAS[command])
    np.random.seed(cfg.get("seed", 0))
    return COMMANDS[command](cfg, threads)


def _numeric_errors():
    from .floquet import FloquetConvergenceError
    from .numkern import NoSignChangeError, SingularMatrixError
    from .opensys import DarkStateError, DegenerateSteadyStateError, InstabilityError
    from .qops import DimensionError, TruncationError
    from .spectra import ConvergenceError, SeriesConvergenceError

    return (FloquetConvergenceError, NoSignChangeError, SingularMatrixError, DarkStateError,
            DegenerateSteadyStateError, InstabilityError, DimensionError, TruncationError, ConvergenceError,
            SeriesConvergenceError, np.linalg.LinAlgError, ArithmeticError)


def _diagnostic(exc: Exception, command: str) -> str:
    payload = {"command": command, "error": type(exc).__name__, "message": str(exc)}
    sv = getattr(exc, "singular_values", None)
    if sv is not None:
        payload["singular_values"] = [float(x) for x in np.ravel(sv)]
    return json.dumps(payload)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="usqed", description="Ultrastrong-coupling cavity QED batch runner")
    ap.add_argument("--version", action="version", version=f"usqed {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", choices=["csv", "json"], help="output format (default csv)")
        sp.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
        jsonschema.validate(cfg, SCHEMAS[args.command])
    except (OSError, json.JSONDecodeError, jsonschema.ValidationError) as exc:
        msg = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
        print(json.dumps({"command": args.command, "error": "ConfigError", "message": msg}), file=sys.stderr)
        return EXIT_CONFIG

    fmt = args.format or cfg.get("format", "csv")
    out = args.out or cfg.get("out")
    try:
        table = run(args.command, cfg, max(1, args.threads))
    except _numeric_errors() as exc:
        print(_diagnostic(exc, args.command), file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(json.dumps({"command": args.command, "error": "ConfigError", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG

    text = (render_csv if fmt == "csv" else render_json)(table, args.command, cfg)
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
