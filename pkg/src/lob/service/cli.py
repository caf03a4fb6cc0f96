"""Command line front door.

    lob validate FILE...      check programs, print diagnostics
    lob fmt [--write] FILE    canonical formatting
    lob run FILE              run the control structures to quiescence
    lob scenario FILE         execute the scenario block
    lob serve                 start the HTTP service

Exit codes: 0 fine, 1 the program is invalid, 2 a file could not be read or
written, 3 the program failed while running. Flags fall back to LOB_*
environment variables where noted.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from ..casmas import CasmasError, MembershipError, reaction_round, world_from_bundle
from ..core.rules import ConnectorNode
from ..core.state import State
from ..dsl import parse_document, render_operand, serialize
from ..dsl.bundle import Bundle, PostStep, PropagateStep, ReplaceStep, RoundStep
from ..engine.registry import RegistryError
from ..engine.runtime import ActionFailure, EngineConfig, run_to_quiescence
from ..flow import FlowError, compose_workspace, propagate, replace_filter
from .runtime import bundle_registry

OK, INVALID, IO, RUNTIME = 0, 1, 2, 3


def _read(path: str) -> str:
    try:
        return Path(path).read_text("utf-8")
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        raise SystemExit(IO)


def _parse_or_die(path: str):
    result = parse_document(_read(path))
    for d in result.diagnostics:
        where = f"{path}:{d.line}" if d.line else path
        print(f"{where}: {d.severity}: [{d.production}] {d.message}", file=sys.stderr)
    if not result.ok:
        raise SystemExit(INVALID)
    return result


def cmd_validate(args: argparse.Namespace) -> int:
    failures = 0
    for path in args.files:
        result = parse_document(_read(path))
        for d in result.diagnostics:
            where = f"{path}:{d.line}" if d.line else path
            print(f"{where}: {d.severity}: [{d.production}] {d.message}")
        if result.ok:
            print(f"{path}: ok")
        else:
            failures += 1
    return INVALID if failures else OK


def cmd_fmt(args: argparse.Namespace) -> int:
    result = _parse_or_die(args.file)
    text = serialize(result.bundle)
    if args.write:
        try:
            Path(args.file).write_text(text, "utf-8")
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return IO
    else:
        sys.stdout.write(text)
    return OK


def cmd_run(args: argparse.Namespace) -> int:
    result = _parse_or_die(args.file)
    bundle: Bundle = result.bundle
    if not bundle.controls:
        print("nothing to run: the program declares no control structures")
        return OK
    try:
        registry = bundle_registry(bundle)
    except RegistryError as e:
        print(f"error: {e}", file=sys.stderr)
        return INVALID
    roots = tuple(c.control for c in bundle.controls)
    control = roots[0] if len(roots) == 1 else ConnectorNode("or", roots)
    state = bundle.state if bundle.state is not None else State({})
    config = EngineConfig(max_iterations=args.max_iterations)
    try:
        rr = run_to_quiescence(control, state, registry, config)
    except ActionFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return RUNTIME
    for fr in rr.firings():
        changed = ", ".join(f"{d.scope} {d.name}" for d in fr.deltas) or "nothing"
        print(f"fired {fr.rule} (iteration {fr.iteration}): {changed}")
    for scope in rr.state.scope_names():
        for name, op in rr.state.entries(scope):
            print(f"{scope} {name} = {render_operand(op)}")
    if rr.halted != "quiescent":
        print(f"error: still eligible after {args.max_iterations} firings", file=sys.stderr)
        return RUNTIME
    print(f"quiescent after {rr.iterations} firings")
    return OK


def cmd_scenario(args: argparse.Namespace) -> int:
    result = _parse_or_die(args.file)
    bundle: Bundle = result.bundle
    if not bundle.scenario:
        print("nothing to do: the program declares no scenario")
        return OK
    try:
        registry = bundle_registry(bundle)
        world = world_from_bundle(bundle)
        flows = {decl.name: compose_workspace(decl) for decl in bundle.workspaces}
    except (RegistryError, CasmasError, FlowError) as e:
        print(f"error: {e}", file=sys.stderr)
        return INVALID
    try:
        for step in bundle.scenario:
            if isinstance(step, PostStep):
                world = world.post(step.entity, step.community, step.attrs)
                print(f"post {step.entity} -> {step.community}")
            elif isinstance(step, RoundStep):
                world, report = reaction_round(world, step.community)
                fired = ", ".join(report.fired()) or "no one"
                print(f"round {step.community}: {fired} fired")
            elif isinstance(step, PropagateStep):
                flows[step.workspace] = propagate(flows[step.workspace], registry)
                print(f"propagate {step.workspace}")
            elif isinstance(step, ReplaceStep):
                flows[step.workspace] = replace_filter(
                    flows[step.workspace], step.filter_id, step.predicate, registry
                )
                print(f"replace {step.workspace} {step.filter_id}")
    except (MembershipError, CasmasError, FlowError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return RUNTIME
    for name, comm in world.communities.items():
        for fact_name, fact in comm.facts:
            attrs = ", ".join(f"{k}={v.raw!r}" for k, v in fact.attrs)
            print(f"{name} {fact_name} ({fact.owner}): {attrs}")
    for name, flow_ws in flows.items():
        for viewer, rows in flow_ws.views.items():
            print(f"{name} {viewer}: {len(rows)} rows")
    return OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app
    from .store import Store, StoreError

    try:
        store = Store(args.store)
    except (OSError, StoreError) as e:
        print(f"error: {e}", file=sys.stderr)
        return IO
    app = create_app(store, token=args.token or None)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lob", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check programs and print diagnostics")
    p.add_argument("files", nargs="+")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("fmt", help="print (or rewrite) the canonical form")
    p.add_argument("file")
    p.add_argument("--write", action="store_true", help="rewrite the file in place")
    p.set_defaults(fn=cmd_fmt)

    p = sub.add_parser("run", help="run the control structures to quiescence")
    p.add_argument("file")
    p.add_argument(
        "--max-iterations",
        type=int,
        default=int(os.environ.get("LOB_MAX_ITERATIONS", "1000")),
        help="firing cap before giving up (env LOB_MAX_ITERATIONS)",
    )
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("scenario", help="execute the scenario block")
    p.add_argument("file")
    p.set_defaults(fn=cmd_scenario)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--store", default=os.environ.get("LOB_STORE", "./lob-store"),
                   help="store directory (env LOB_STORE)")
    p.add_argument("--host", default=os.environ.get("LOB_HOST", "127.0.0.1"),
                   help="bind address (env LOB_HOST)")
    p.add_argument("--port", type=int, default=int(os.environ.get("LOB_PORT", "8323")),
                   help="bind port (env LOB_PORT)")
    p.add_argument("--token", default=os.environ.get("LOB_TOKEN", ""),
                   help="require this token on every request (env LOB_TOKEN)")
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
