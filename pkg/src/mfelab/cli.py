"""Command-line front end: ``mfelab {solve,continue,certify} --scenario FILE --out DIR``.

Scenarios are YAML trees.  Every report embeds the package version and a
SHA-256 hash of the canonical (sorted-key) form of the scenario, and report
JSON carries no timestamps, so identical scenarios give identical bytes.
Wall-clock times go to ``run.log``.

Exit codes: 0 success, 1 configuration error, 2 solver error,
3 asymptotic construction error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy.fft
import yaml

from . import __version__, solver, torus
from .errors import ConfigError, GluingMismatch, InsufficientResolution, MFEError, NonConvergence
from .functional import EIGHT_PI, Params, Weights
from .torus import Field, Grid

log = logging.getLogger("mfelab")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CONSTRUCTION = 0, 1, 2, 3
COMMANDS = ("solve", "continue", "certify")


# -- scenario -----------------------------------------------------------------


def canonical(tree) -> str:
    return yaml.safe_dump(tree, sort_keys=True, default_flow_style=False, allow_unicode=True)


def scenario_hash(tree) -> str:
    return hashlib.sha256(canonical(tree).encode()).hexdigest()


def load_scenario(path) -> dict:
    try:
        tree = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read scenario: {exc}") from exc
    if not isinstance(tree, dict):
        raise ConfigError("scenario must be a mapping")
    return tree


@dataclass(frozen=True)
class Scenario:
    """A parsed scenario tree plus the directory its relative paths resolve against."""

    tree: dict
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_file(cls, path) -> "Scenario":
        return cls(load_scenario(path), Path(path).resolve().parent)

    @classmethod
    def from_text(cls, text: str, base_dir=None) -> "Scenario":
        try:
            tree = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse scenario: {exc}") from exc
        if not isinstance(tree, dict):
            raise ConfigError("scenario must be a mapping")
        return cls(tree, Path(base_dir) if base_dir else Path.cwd())

    @property
    def seed(self) -> int:
        try:
            seed = int(self.tree.get("seed", 0))
        except (TypeError, ValueError) as exc:
            raise ConfigError("seed must be an integer") from exc
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        return seed

    def with_seed(self, seed) -> "Scenario":
        s = Scenario(dict(self.tree, seed=self.seed if seed is None else seed), self.base_dir)
        return Scenario(dict(s.tree, seed=s.seed), self.base_dir)

    @property
    def canonical(self) -> str:
        return canonical(self.tree)

    @property
    def hash(self) -> str:
        return scenario_hash(self.tree)


def _num(x, what: str) -> float:
    """Numbers, or strings such as '4pi' / '8*pi' / '2*pi'."""
    if isinstance(x, bool):
        raise ConfigError(f"{what}: expected a number")
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str):
        s = x.replace(" ", "").replace("*", "")
        if s.endswith("pi"):
            head = s[:-2]
            try:
                return (float(head) if head else 1.0) * math.pi
            except ValueError:
                pass
        try:
            return float(s)
        except ValueError:
            pass
    raise ConfigError(f"{what}: cannot parse {x!r} as a number")


def _grid_sizes(tree) -> list[int]:
    n = (tree.get("grid") or {}).get("n", 64)
    ns = n if isinstance(n, list) else [n]
    try:
        grids = [Grid(int(k)) for k in ns]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid.n: {exc}") from exc
    return [g.n for g in grids]


def weight_field(spec, grid: Grid, base_dir: Path) -> Field:
    if spec is None:
        spec = {"family": "constant"}
    if not isinstance(spec, dict) or "family" not in spec:
        raise ConfigError("each weight needs a 'family'")
    fam = spec["family"]
    g = lambda k, d: _num(spec.get(k, d), f"{fam}.{k}")
    if fam == "constant":
        return Field.constant(grid, g("value", 1.0))
    if fam == "sinusoidal":
        kx, ky = int(spec.get("kx", 1)), int(spec.get("ky", 0))
        base, amp, ph = g("base", 1.0), g("amplitude", 0.5), g("phase", 0.0)
        return Field.from_function(grid, lambda X, Y: base + amp * np.sin(2 * np.pi * (kx * X + ky * Y) + ph))
    if fam == "gaussian-bump":
        c = spec.get("center", [0.5, 0.5])
        base, amp, wd = g("base", 1.0), g("amplitude", 4.0), g("width", 0.1)
        if not wd > 0:
            raise ConfigError("gaussian-bump.width must be positive")
        dx, dy = torus.displacement(grid, (_num(c[0], "center"), _num(c[1], "center")))
        return Field(grid, base + amp * np.exp(-(dx**2 + dy**2) / (2 * wd * wd)))
    if fam == "file":
        path = base_dir / str(spec.get("path", ""))
        try:
            f = torus.read_field(path) if path.suffix == ".mfe" else Field(grid, np.load(path))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load weight file {path}: {exc}") from exc
        if f.n != grid.n:
            raise ConfigError(f"weight file {path} has n={f.n}, scenario needs n={grid.n}")
        return f
    raise ConfigError(f"unknown weight family {fam!r}")


def build_weights(tree, grid: Grid, base_dir: Path) -> Weights:
    ws = tree.get("weights") or {}
    h1 = weight_field(ws.get("h1"), grid, base_dir)
    h2 = weight_field(ws.get("h2"), grid, base_dir)
    try:
        return Weights(h1, h2)
    except MFEError as exc:
        raise ConfigError(str(exc)) from exc


def solve_config(tree) -> solver.SolveConfig:
    raw = tree.get("solver") or {}
    known = {f.name: f for f in fields(solver.SolveConfig)}
    unknown = set(raw) - set(known)
    if unknown:
        raise ConfigError(f"unknown solver options: {sorted(unknown)}")
    kw = {}
    for k, v in raw.items():
        kind = type(getattr(solver.SolveConfig(), k))
        kw[k] = bool(v) if kind is bool else (int(v) if kind is int else _num(v, f"solver.{k}"))
    try:
        return solver.SolveConfig(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _params(tree) -> dict:
    return tree.get("params") or {}


def _eps_seq(tree, key="eps") -> list[float]:
    seq = _params(tree).get(key)
    if seq is None:
        return []
    if not isinstance(seq, list):
        raise ConfigError(f"params.{key} must be a list")
    return [_num(e, f"params.{key}") for e in seq]


# -- reports ------------------------------------------------------------------


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_json(path: Path, body: dict, meta: dict) -> None:
    doc = dict(body, mfelab_version=__version__, scenario_hash=meta["hash"])
    path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")


def _result_dict(r: solver.SolveResult) -> dict:
    return dict(J=r.J, grad_norm=r.grad_norm, iters=r.iters, converged=r.converged, status=r.status,
                params=asdict(r.params) if r.params else None, diagnostics=asdict(r.diag))


def _random_start(grid: Grid, rng: np.random.Generator, modes: int = 4, amp: float = 1.0) -> Field:
    """Smooth random trigonometric polynomial with |k| ≤ modes, mean zero."""
    c = np.zeros((grid.n, grid.n), complex)
    ks = [k for k in range(-modes, modes + 1)]
    for kx in ks:
        for ky in ks:
            if (kx, ky) != (0, 0) and kx * kx + ky * ky <= modes * modes:
                c[kx, ky] = (rng.standard_normal() + 1j * rng.standard_normal()) * amp / (1 + kx * kx + ky * ky)
    return Field.from_coeffs(grid, c).centered()


# -- commands -----------------------------------------------------------------


def cmd_solve(tree, out: Path, meta: dict) -> int:
    cfg = solve_config(tree)
    pr = _params(tree)
    p = Params(_num(pr.get("rho1", 4 * np.pi), "rho1"), _num(pr.get("rho2", 4 * np.pi), "rho2"),
               _num(pr.get("eps0", 0.0), "eps0"))
    starts = int((tree.get("solve") or {}).get("multistart", 0))
    rng = np.random.default_rng(meta["seed"])
    reports = []
    for n in _grid_sizes(tree):
        grid = Grid(n)
        w = build_weights(tree, grid, meta["base"])
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                res = solver.minimize(w, p, None, cfg)
                extra = [solver.minimize(w, p, _random_start(grid, rng), cfg) for _ in range(starts)]
        except MFEError as exc:
            log.error("solver failed at n=%d: %s", n, exc)
            return EXIT_SOLVER
        body = dict(command="solve", n=n, result=_result_dict(res), classification=p.classification)
        if extra:
            Js = [res.J] + [r.J for r in extra]
            body["multistart"] = dict(J=Js, spread=float(np.ptp(Js)), multiwell=bool(np.ptp(Js) > 1e-6))
        write_json(out / f"solve_n{n}.json", body, meta)
        torus.write_field(res.u, out / f"solve_n{n}.mfe")
        torus.write_field_csv(res.u, out / f"solve_n{n}_field.csv")
        reports.append(res)
        log.info("solve n=%d J=%.12g grad=%.2e iters=%d", n, res.J, res.grad_norm, res.iters)
    if len(reports) > 1:
        Js = [r.J for r in reports]
        write_json(out / "solve_refinement.json", dict(command="solve", n=_grid_sizes(tree), J=Js,
                                                      max_delta=float(np.ptp(Js))), meta)
    return EXIT_OK if all(r.converged for r in reports) else EXIT_SOLVER


def cmd_continue(tree, out: Path, meta: dict) -> int:
    eps = _eps_seq(tree)
    if not eps:
        raise ConfigError("params.eps must list at least one value")
    cfg = solve_config(tree)
    pr = _params(tree)
    full = bool(pr.get("full_critical", False))
    rho2 = _num(pr.get("rho2", 4 * np.pi), "rho2")
    grid = Grid(_grid_sizes(tree)[0])
    w = build_weights(tree, grid, meta["base"])
    try:
        results = solver.continuation(w, rho2, eps, cfg, full_critical=full)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    (out / "continuation.csv").write_text(solver.continuation_csv(results))
    body = dict(command="continue", n=grid.n, rows=solver.continuation_rows(results))
    try:
        rep = solver.blowup_equivalence_report(results)
        body["equivalence"] = asdict(rep)
    except MFEError as exc:
        body["equivalence"] = dict(verdict=f"unavailable: {exc}")
    write_json(out / "continuation.json", body, meta)
    ok = all(r.status == "ok" for r in results)
    return EXIT_OK if ok else EXIT_SOLVER


def cmd_certify(tree, out: Path, meta: dict) -> int:
    from .asymptotics import certify as cert

    opts = tree.get("certify") or {}
    mode = opts.get("mode", "partial")
    if mode not in ("partial", "full"):
        raise ConfigError(f"certify.mode must be partial or full, got {mode!r}")
    eps = _eps_seq(tree) or list(cert.DEFAULT_EPS)
    grid = Grid(_grid_sizes(tree)[0])
    w = build_weights(tree, grid, meta["base"])
    try:
        if mode == "partial":
            rho2 = _num(_params(tree).get("rho2", 4 * np.pi), "rho2")
            if not 0 < rho2 < EIGHT_PI:
                raise ConfigError("partial certificate needs 0 < rho2 < 8π")
            c = cert.certify_partial(w, rho2, eps, max_candidates=int(opts.get("max_candidates", 3)))
        else:
            c = cert.certify_full(w, eps, reductions=bool(opts.get("reductions", False)))
    except (GluingMismatch, InsufficientResolution, NonConvergence, MFEError) as exc:
        if isinstance(exc, ConfigError):
            raise
        log.error("construction failed: %s", exc)
        return EXIT_CONSTRUCTION
    body = dict(command="certify", n=grid.n, certificate=c.to_dict())
    if not c.probative:
        body["note"] = "condition does not hold; the certificate is not probative"
    write_json(out / "certificate.json", body, meta)
    (out / "certificate.csv").write_text(c.to_csv())
    return EXIT_OK


HANDLERS = {"solve": cmd_solve, "continue": cmd_continue, "certify": cmd_certify}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mfelab", description="Mean field equation lab on the flat torus")
    ap.add_argument("--version", action="version", version=f"mfelab {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--scenario", required=True, help="YAML scenario file")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    ap.add_argument("--seed", type=int, default=None, help="RNG seed (overrides the scenario)")
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    try:
        sc = Scenario.from_file(args.scenario).with_seed(args.seed)
        tree = sc.tree
        meta = dict(hash=sc.hash, seed=sc.seed, base=sc.base_dir)
        (out / "scenario.yaml").write_text(sc.canonical)
        t0 = time.perf_counter()
        with scipy.fft.set_workers(max(1, args.threads)):
            code = HANDLERS[args.command](tree, out, meta)
        log.info("%s finished with exit code %d in %.2f s", args.command, code, time.perf_counter() - t0)
        return code
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        print(f"mfelab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    finally:
        log.removeHandler(handler)
        handler.close()


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
