import argparse
import sys

from core.config import load_config
from core.errors import CKGPError, ConfigError
from core.log import setup_logging
from core.pipeline import COMMANDS

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_UPSTREAM = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ckgp", description="Commonsense knowledge graph population toolkit")
    parser.add_argument('command', choices=sorted(COMMANDS), help='Pipeline stage to run')
    parser.add_argument('--config', required=True, help='Flat key = value config file')
    parser.add_argument('--relation', default=None, help='ATOMIC relation (default: every configured relation)')
    parser.add_argument('--seed', type=int, default=None, help='Override every stage seed')
    parser.add_argument('--strict', action='store_true', help='Serial, bitwise-reproducible mode')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    setup_logging(args.verbose)

    try:
        cfg = load_config(args.config, seed=args.seed, strict=True if args.strict else None)
        if args.relation is not None and args.relation not in cfg.relations:
            raise ConfigError(f"relation {args.relation!r} is not in the configured relations {cfg.relations}")
        command = COMMANDS[args.command]
        print(f"🚀 {args.command} ({cfg.paths.workdir})")
        if args.command == "align":
            results = [command(cfg)]
        elif args.command == "eval":
            results = [command(cfg, args.relation)]
        else:
            relations = [args.relation] if args.relation else cfg.relations
            results = [command(cfg, rel) for rel in relations]
    except CKGPError as e:
        print(f"❌ {e}", file=sys.stderr)
        return e.exit_code
    except (FileNotFoundError, ValueError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_DATA

    for res in results:
        label = f"{res.command}{' ' + res.relation if res.relation else ''}"
        if res.up_to_date:
            print(f"  ✓ {label}: up-to-date")
        else:
            print(f"  ✓ {label}: {len(res.outputs)} outputs")
        warning = res.summary.get("warning") if isinstance(res.summary, dict) else None
        if warning:
            print(f"  ⚠️  {label}: {warning}")
    print(f"✅ {args.command} done")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(run())
