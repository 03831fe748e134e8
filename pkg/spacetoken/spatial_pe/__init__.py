from spacetoken.spatial_pe.decoder import PeDecoder, decode, lookup_bev
from spacetoken.spatial_pe.encoder import encode, encode_batch, encode_bev
from spacetoken.spatial_pe.injection import (
    ALPHA_PARAM,
    alpha_tensor,
    inject,
    register_alpha,
    register_mlp_encoder,
    spatial_rows,
)
from spacetoken.spatial_pe.models import (
    PeConfig,
    PeError,
    PeScale,
    SpatialEncoding,
    split_widths,
)

__all__ = [
    "ALPHA_PARAM",
    "PeConfig",
    "PeDecoder",
    "PeError",
    "PeScale",
    "SpatialEncoding",
    "alpha_tensor",
    "decode",
    "encode",
    "encode_batch",
    "encode_bev",
    "inject",
    "lookup_bev",
    "register_alpha",
    "register_mlp_encoder",
    "spatial_rows",
    "split_widths",
]
