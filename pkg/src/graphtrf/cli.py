"""Command-line entry point: ``graphtrf <subcommand>``.

Artifacts live in one working directory (``--workdir``, default ``.``):

    instances.jsonl  gen           probe.jsonl, trfp.jsonl, trfp_freq.tsv  probe / build-trfp
    router.json      train         routes.jsonl                            route
    eval.jsonl, eval_choices.json  eval        report.tsv                   report

Each subcommand also writes ``manifests/<subcommand>.json``.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import os
import platform
import sys
from importlib import resources

import numpy as np

from . import __version__, kernels
from .client import ChatClient, SimClient, SimProfile
from .errors import (
    ClientError, ConfigError, Degenerate, GenerationExhausted, IncompleteJournal, ProbeError, RendererMissing,
    RenderFailed,
)
from .evaluate import aggregate, all_strategies, choose, needed_trfs, pretty_report, report_tsv
from .generate import gen_dataset
from .graph import IN_DOMAIN_TASKS, GenConfig, TaskKind, read_instances, write_instances
from .metrics import GreParams
from .probe import Journal, Prober, build_trfp, frequency_tsv, read_trfp, stats_from_records, write_trfp
from .render import TRF_ORDER, Rasterizer, TrfKind, assemble_prompt
from .router import Hyper, RouterModel, load_router, predict, route_with, train, verify_pareto

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("graphtrf")

EXIT_OK, EXIT_CONFIG, EXIT_MISSING, EXIT_CLIENT = 0, 2, 3, 4

FILES = {
    "instances": ("instances.jsonl", "gen"),
    "probe": ("probe.jsonl", "probe"),
    "trfp": ("trfp.jsonl", "build-trfp"),
    "freq": ("trfp_freq.tsv", "build-trfp"),
    "router": ("router.json", "train"),
    "routes": ("routes.jsonl", "route"),
    "eval": ("eval.jsonl", "eval"),
    "choices": ("eval_choices.json", "eval"),
    "report": ("report.tsv", "report"),
}

# probe and eval journals use different run seeds for the same seed value
PROBE_SALT, EVAL_SALT = 0, 1


class MissingArtifact(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers


def _path(args, key: str, override: str | None = None) -> str:
    return override or os.path.join(args.workdir, FILES[key][0])


def _need(args, key: str, override: str | None = None) -> str:
    path = _path(args, key, override)
    if not os.path.exists(path):
        raise MissingArtifact(f"{path} not found; run `graphtrf {FILES[key][1]}` first")
    return path


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from None


def load_sim(spec: str) -> SimProfile:
    """A profile TOML path, or the name of a bundled preset."""
    if os.path.exists(spec):
        return SimProfile.load(spec)
    name = os.path.splitext(os.path.basename(spec))[0]
    res = resources.files("graphtrf") / "presets" / f"{name}.toml"
    if res.is_file():
        return SimProfile.from_toml(res.read_text(encoding="utf-8"))
    raise ConfigError(f"--sim {spec!r} is neither a file nor a bundled preset")


def make_client(args, config: dict):
    if args.sim:
        return SimClient(load_sim(args.sim))
    section = config.get("client", {})
    if "base_url" not in section or "model" not in section:
        raise ConfigError("a live client needs [client] base_url and model in --config (or use --sim)")
    extra = {k: section[k] for k in ("temperature", "max_tokens", "timeout", "concurrency", "system") if k in section}
    return ChatClient(section["base_url"], section["model"], **extra)


def make_rasterizer(config: dict) -> Rasterizer:
    section = config.get("renderer", {})
    return Rasterizer(section.get("path"), section.get("cache_dir"))


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(args, command: str, inputs: list[str], outputs: list[str], extra: dict | None = None) -> None:
    snapshot = {k: v for k, v in vars(args).items() if k != "func" and _jsonable(v)}
    body = {
        "command": command,
        "args": snapshot,
        "config": load_config(args.config),
        "seed": getattr(args, "seed", None),
        "inputs": {p: _digest(p) for p in inputs if os.path.exists(p)},
        "outputs": {p: _digest(p) for p in outputs if os.path.exists(p)},
        "versions": {
            "graphtrf": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "kernel_backend": kernels.backend(),
        },
    }
    if extra:
        body.update(extra)
    body["run_id"] = hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]
    body["finished_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    mdir = os.path.join(args.workdir, "manifests")
    os.makedirs(mdir, exist_ok=True)
    with open(os.path.join(mdir, f"{command}.json"), "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jsonable(v) -> bool:
    try:
        json.dumps(v)
        return True
    except TypeError:
        return False


def _params(args, config: dict, k_default: int) -> GreParams:
    section = config.get("probe", {})
    alpha = args.alpha if args.alpha is not None else section.get("alpha", 0.5)
    k = args.k if args.k is not None else k_default
    try:
        return GreParams(alpha=float(alpha), k=int(k))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _gen_config(args, config: dict) -> GenConfig:
    section = dict(config.get("gen", {}))
    if args.seed is not None:
        section["seed"] = args.seed
    try:
        return GenConfig.from_dict(section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[gen]: {exc}") from None


def _parse_tasks(text: str) -> list[TaskKind]:
    try:
        return [TaskKind.parse(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args, config: dict) -> int:
    gc = _gen_config(args, config)
    tasks = _parse_tasks(args.tasks) if args.tasks else list(IN_DOMAIN_TASKS)
    for t in tasks:
        gc.validate_for(t)
    out = _path(args, "instances", args.out)
    instances = gen_dataset(tasks, args.count, gc)
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    write_instances(out, instances)
    write_manifest(args, "gen", [], [out], {"gen_config": gc.to_dict()})
    print(f"wrote {len(instances)} instances to {out}")
    return EXIT_OK


def cmd_render(args, config: dict) -> int:
    instances = read_instances(_need(args, "instances", args.instances))
    if args.id:
        matches = [q for q in instances if q.id == args.id]
        if not matches:
            raise ConfigError(f"no instance with id {args.id}")
        inst = matches[0]
    else:
        if not 0 <= args.index < len(instances):
            raise ConfigError(f"--index {args.index} out of range (0..{len(instances) - 1})")
        inst = instances[args.index]
    trf = TrfKind.parse(args.trf)
    raster = make_rasterizer(config) if (args.png and trf.visual) else None
    prompt = assemble_prompt(inst, trf, cot=args.cot, rasterizer=raster)
    if args.png and prompt.image_bytes is not None:
        with open(args.png, "wb") as fh:
            fh.write(prompt.image_bytes)
    if prompt.dot_source is not None:
        sys.stdout.write(prompt.dot_source)
    sys.stdout.write(prompt.text + "\n")
    return EXIT_OK


def _write_trfp(args, instances, journal: Journal, params: GreParams) -> tuple[str, str]:
    examples = build_trfp(instances, journal.records(), params)
    trfp_path, freq_path = _path(args, "trfp"), _path(args, "freq")
    write_trfp(trfp_path, examples)
    with open(freq_path, "w", encoding="utf-8") as fh:
        fh.write(frequency_tsv(examples))
    return trfp_path, freq_path


def cmd_probe(args, config: dict) -> int:
    inst_path = _need(args, "instances", args.instances)
    instances = read_instances(inst_path)
    params = _params(args, config, 10)
    client = make_client(args, config)
    journal = Journal(_path(args, "probe"))
    seed = args.seed if args.seed is not None else 0
    prober = Prober(client, journal, params, seed, PROBE_SALT, args.cot,
                    make_rasterizer(config) if client.needs_images else None, args.workers)
    try:
        prober.run(instances)
    finally:
        log.info("journal holds %d runs", len(journal))
    trfp_path, freq_path = _write_trfp(args, instances, journal, params)
    write_manifest(args, "probe", [inst_path], [journal.path, trfp_path, freq_path])
    print(f"{len(journal)} runs journaled; TRFP dataset at {trfp_path}")
    return EXIT_OK


def _probe_manifest_args(args) -> dict:
    path = os.path.join(args.workdir, "manifests", "probe.json")
    if not os.path.exists(path):
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh).get("args", {})


def cmd_build_trfp(args, config: dict) -> int:
    inst_path = _need(args, "instances", args.instances)
    journal_path = _need(args, "probe")
    # k and alpha default to whatever the probe run used
    probed = _probe_manifest_args(args)
    if args.k is None:
        args.k = probed.get("k")
    if args.alpha is None:
        args.alpha = probed.get("alpha")
    params = _params(args, config, 10)
    trfp_path, freq_path = _write_trfp(args, read_instances(inst_path), Journal(journal_path), params)
    write_manifest(args, "build-trfp", [inst_path, journal_path], [trfp_path, freq_path])
    sys.stdout.write(open(freq_path, encoding="utf-8").read())
    return EXIT_OK


def cmd_train(args, config: dict) -> int:
    trfp_path = _need(args, "trfp", args.trfp)
    section = config.get("train", {})
    hyper_args = {k: getattr(args, k) if getattr(args, k) is not None else section.get(k)
                  for k in ("lr", "epochs", "batch", "l2")}
    hyper_args = {k: v for k, v in hyper_args.items() if v is not None}
    hyper_args["seed"] = args.seed if args.seed is not None else section.get("seed", 0)
    try:
        hyper = Hyper(**hyper_args)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    model = train(read_trfp(trfp_path), hyper)
    out = _path(args, "router", args.out)
    model.save(out)
    write_manifest(args, "train", [trfp_path], [out])
    print(f"trained on {model.meta['examples']} examples; final loss {model.meta['final_loss']:.6f}")
    return EXIT_OK


def cmd_route(args, config: dict) -> int:
    inst_path = _need(args, "instances", args.instances)
    router_path = _need(args, "router", args.router)
    router = load_router(router_path)
    out = _path(args, "routes")
    with open(out, "w", encoding="utf-8") as fh:
        for q in read_instances(inst_path):
            rec = {"question_id": q.id, "trf": route_with(router, q).value}
            if isinstance(router, RouterModel):
                from .features import featurize

                probs = predict(router, featurize(q))
                rec["probs"] = [probs[t] for t in TRF_ORDER]
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
    write_manifest(args, "route", [inst_path, router_path], [out])
    print(f"routes written to {out}")
    return EXIT_OK


def _strategies(args) -> list[str]:
    names = args.strategy or all_strategies()
    from .evaluate import parse_strategy, strategy_name

    try:
        return [strategy_name(*parse_strategy(s)) for s in names]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_eval(args, config: dict) -> int:
    inst_path = _need(args, "instances", args.instances)
    instances = read_instances(inst_path)
    strategies = _strategies(args)
    params = _params(args, config, 3)
    router = None
    inputs = [inst_path]
    if "learned" in strategies:
        router_path = _need(args, "router", args.router)
        router = load_router(router_path)
        inputs.append(router_path)
    selection: dict[str, set] = {q.id: set() for q in instances}
    for s in strategies:
        for qid, trfs in needed_trfs(s, instances, router).items():
            selection[qid].update(trfs)
    ordered = {qid: [t for t in TRF_ORDER if t in trfs] for qid, trfs in selection.items()}
    client = make_client(args, config)
    journal = Journal(_path(args, "eval"))
    seed = args.seed if args.seed is not None else 0
    prober = Prober(client, journal, params, seed, EVAL_SALT, args.cot,
                    make_rasterizer(config) if client.needs_images else None, args.workers)
    prober.run(instances, selection=ordered)
    stats = stats_from_records(journal.records(), params.k, strict=False)
    choices = {s: {qid: t.value for qid, t in choose(s, instances, stats, params.alpha, router).items()}
               for s in strategies}
    out = _path(args, "choices")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump({"alpha": params.alpha, "k": params.k, "instances": inst_path, "strategies": choices},
                  fh, indent=1, sort_keys=True)
        fh.write("\n")
    write_manifest(args, "eval", inputs, [journal.path, out])
    print(f"evaluated {len(strategies)} strategies on {len(instances)} questions")
    return EXIT_OK


def cmd_report(args, config: dict) -> int:
    choices_path = _need(args, "choices")
    journal_path = _need(args, "eval")
    with open(choices_path, encoding="utf-8") as fh:
        saved = json.load(fh)
    inst_path = _need(args, "instances", args.instances or saved["instances"])
    instances = read_instances(inst_path)
    alpha = args.alpha if args.alpha is not None else saved["alpha"]
    k = saved["k"]
    records = Journal(journal_path).records()
    stats = stats_from_records(records, k, strict=False)
    results = {}
    canon = all_strategies()
    for name in sorted(saved["strategies"], key=canon.index):
        choice = saved["strategies"][name]
        picked = {qid: TrfKind(t) for qid, t in choice.items()}
        if alpha != saved["alpha"] and name == "ideal":
            picked = choose("ideal", instances, stats, alpha)
        results[name] = aggregate(instances, stats, picked, alpha)
    text = report_tsv(results, alpha)
    full = {qid: row for qid, row in stats.items() if len(row) == len(TRF_ORDER)}
    if full:
        text += "\n" + verify_pareto(full, alpha).to_tsv()
    out = _path(args, "report", args.out)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)
    write_manifest(args, "report", [inst_path, journal_path, choices_path], [out])
    if args.pretty:
        sys.stdout.write(pretty_report(text))
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphtrf", description="Graph-QA TRF probing, routing and evaluation.")
    p.add_argument("--version", action="version", version=f"graphtrf {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workdir", default=".", help="directory holding pipeline artifacts")
    common.add_argument("--config", help="TOML config file")
    common.add_argument("--seed", type=int, help="root seed for all randomness")
    common.add_argument("-v", "--verbose", action="store_true")

    runner = argparse.ArgumentParser(add_help=False)
    runner.add_argument("--sim", help="simulated model: profile TOML or preset name (gpt4o, gemini25pro)")
    runner.add_argument("--k", type=int, help="runs per (question, TRF)")
    runner.add_argument("--alpha", type=float, help="GRE token exponent (default 0.5)")
    runner.add_argument("--cot", action="store_true", help="append the chain-of-thought suffix")
    runner.add_argument("--workers", type=int, default=1, help="parallel requests")
    runner.add_argument("--instances", help="instances file (default <workdir>/instances.jsonl)")

    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate QA instances")
    g.add_argument("--tasks", help="comma-separated tasks (default: the 7 in-domain tasks)")
    g.add_argument("--count", type=int, default=1000, help="instances per task")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("render", parents=[common], help="print the prompt for one instance and TRF")
    r.add_argument("--instances")
    r.add_argument("--index", type=int, default=0)
    r.add_argument("--id")
    r.add_argument("--trf", required=True)
    r.add_argument("--cot", action="store_true")
    r.add_argument("--png", help="also rasterize a visual TRF to this file")
    r.set_defaults(func=cmd_render)

    pr = sub.add_parser("probe", parents=[common, runner], help="probe all TRFs and build the TRFP dataset")
    pr.set_defaults(func=cmd_probe)

    b = sub.add_parser("build-trfp", parents=[common], help="rebuild the TRFP dataset from the probe journal")
    b.add_argument("--instances")
    b.add_argument("--k", type=int)
    b.add_argument("--alpha", type=float)
    b.set_defaults(func=cmd_build_trfp)

    t = sub.add_parser("train", parents=[common], help="train the TRF router")
    t.add_argument("--trfp")
    t.add_argument("--lr", type=float)
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch", type=int)
    t.add_argument("--l2", type=float)
    t.add_argument("--out")
    t.set_defaults(func=cmd_train)

    ro = sub.add_parser("route", parents=[common], help="route instances with a trained router")
    ro.add_argument("--instances")
    ro.add_argument("--router", help="router.json or router_predictions.jsonl")
    ro.set_defaults(func=cmd_route)

    e = sub.add_parser("eval", parents=[common, runner], help="evaluate routing strategies")
    e.add_argument("--strategy", action="append",
                   help="fixed:<TRF>, learned or ideal; repeatable (default: all)")
    e.add_argument("--router", help="router.json or router_predictions.jsonl")
    e.set_defaults(func=cmd_eval)

    rp = sub.add_parser("report", parents=[common], help="emit the results table")
    rp.add_argument("--instances")
    rp.add_argument("--alpha", type=float)
    rp.add_argument("--out")
    rp.add_argument("--pretty", action="store_true", help="print a rounded table instead of TSV")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except MissingArtifact as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (ProbeError, ClientError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CLIENT
    except IncompleteJournal as exc:
        print(f"error: incomplete journal: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (RendererMissing, RenderFailed) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ValueError, GenerationExhausted, Degenerate) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
