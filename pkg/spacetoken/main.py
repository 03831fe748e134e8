import argparse
import logging
import sys

from pydantic import ValidationError

from spacetoken.conf import CONFIG

# Before any command module is imported, logging is critical
logging.basicConfig(level=CONFIG.log_level)
logging.getLogger("matplotlib").setLevel(logging.WARNING)
logging.getLogger("shapely").setLevel(logging.WARNING)

from spacetoken.commands import COMMANDS  # noqa: E402
from spacetoken.commands.base import UsageError  # noqa: E402
from spacetoken.utils import SpaceTokenError  # noqa: E402

LOGGER = logging.getLogger(__name__)

if CONFIG.sentry_dsn:
    import sentry_sdk

    sentry_sdk.init(
        dsn=CONFIG.sentry_dsn,
        traces_sample_rate=0.01,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spacetoken",
        description="Sine-cosine coordinate encodings for a desk-scale driving planner.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.add_parser(subparsers)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as e:
        parser.error(e.message)
    except SpaceTokenError as e:
        LOGGER.error(f"{args.command} failed: {e}")
        print(str(e), file=sys.stderr)
        return 1
    except ValidationError as e:
        LOGGER.error(f"{args.command} failed: invalid configuration")
        print(str(e), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
