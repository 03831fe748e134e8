import argparse

from spacetoken.geometry.models import Coordinate3D
from spacetoken.spatial_pe.encoder import encode, encode_bev
from spacetoken.spatial_pe.models import DEFAULT_BASE, PeConfig


def parse_coord(value: str) -> tuple[float, ...]:
    try:
        parts = tuple(float(p) for p in value.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"{value!r} is not x,y[,z]") from e
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError(f"{value!r} is not x,y[,z]")
    return parts


def add_parser(subparsers: argparse._SubParsersAction):
    parser = subparsers.add_parser("encode", help="Print the sine-cosine encoding of a coordinate")
    parser.add_argument("--coord", type=parse_coord, required=True, help='"x,y[,z]" in meters')
    parser.add_argument("--dim", type=int, default=128)
    parser.add_argument("--base", type=float, default=DEFAULT_BASE)
    parser.add_argument("--bev", action="store_true", help="Zero the z block")
    parser.add_argument("--decimals", type=int, default=6)
    parser.set_defaults(func=run)


def run(args: argparse.Namespace):
    cfg = PeConfig(dim=args.dim, base=args.base)
    x, y, *rest = args.coord
    if args.bev:
        encoding = encode_bev(x, y, cfg)
    else:
        encoding = encode(Coordinate3D(x=x, y=y, z=rest[0] if rest else 0.0), cfg)
    print(encoding.csv(args.decimals))
