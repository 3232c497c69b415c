"""dspace: an embeddable metric-space search engine.

Users define nestable metric spaces as web documents; data arrives as
partially-defined domain vectors; similarity and range search run over a
per-dimension synchronized index whose cost depends only on the searched
dimensions.
"""

from .errors import (
    DspaceError,
    FixedPartViolation,
    NotComparable,
    ParseError,
    UnknownReference,
    ValidationError,
)
from .metric import (
    Composite,
    FeatureVector,
    GeodesicLeaf,
    LeafDim,
    MinkowskiLeaf,
    discrete_distance,
    estimate_weights,
    induced_distance,
    minkowski_distance,
    nested_distance,
)
from .schema import (
    DomainSpaceDef,
    FlatSchema,
    Registry,
    derive_evaluation_ds,
    fixed_part_checksum,
    flatten,
    parse_ds_definition,
    resolve_same_as,
    serialize_ds_definition,
)
from .codec import (
    DomainVector,
    DVGroup,
    decode_value,
    encode_value,
    interval_search_params,
    parse_dv,
    parse_dv_group,
    serialize_dv,
    tux_decode,
    tux_encode,
)
from .index import (
    BuildOptions,
    IndexSnapshot,
    build_index,
    range_prefilter,
    scan,
    text_lookup,
    topk,
)
from .search import (
    DimQuery,
    SearchRequest,
    SearchResult,
    find_ds,
    numeric_search,
    scatter_data,
    stats,
)
from .rdf import Triple, dvs_to_triples, read_ntriples, triples_to_dvs, write_ntriples

__version__ = "0.1.0"
