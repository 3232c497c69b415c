"""Shared fixtures: the cupboard demo space and its 24-row data set."""
from __future__ import annotations

from dspace.codec import parse_dv_group
from dspace.schema import (
    BranchContent,
    DimensionDef,
    DomainSpaceDef,
    Keycomment,
    KeycommentPair,
    Keyword,
    LeafContent,
    Registry,
)

CUPBOARD_DSI = "http://example.com/ds/cupboard"
FINANCES_DSI = "http://example.com/ds/finances"
SIZE_DSI = "http://example.com/ds/size"
BW_DSI = "http://numericsearch.com/bw.xml"


def pair(kw0: str, *more: str, comment: str = "", url: str | None = None,
         state: str = "ok") -> KeycommentPair:
    kws = [Keyword(text=kw0, url=url)] + [Keyword(text=t) for t in more]
    kc = Keycomment(keywords=tuple(kws), comment=comment)
    return KeycommentPair(fixed=kc, changeable=kc, state=state)


def finances_def() -> DomainSpaceDef:
    return DomainSpaceDef(
        dsi=FINANCES_DSI,
        pair=pair("Finances"),
        owner=1,
        metric="M1",
        dimensions=(
            DimensionDef(di="Price", pair=pair("Price", "Euro"), weight=1.0,
                         content=LeafContent(kind="money")),
        ),
    )


def size_def() -> DomainSpaceDef:
    dims = tuple(
        DimensionDef(di=di, pair=pair(di, "cm"), weight=1.0,
                     content=LeafContent(kind="integer"))
        for di in ("Width", "Depth", "Height")
    )
    return DomainSpaceDef(dsi=SIZE_DSI, pair=pair("Size"), owner=1, metric="M1",
                          dimensions=dims)


def cupboard_def() -> DomainSpaceDef:
    return DomainSpaceDef(
        dsi=CUPBOARD_DSI,
        pair=pair("Cupboard", "Schrank", url="http://en.wikipedia.org/wiki/cupboard"),
        owner=1,
        metric="M1",
        dimensions=(
            DimensionDef(di="Finances", pair=pair("Finances"), weight=1.0,
                         content=BranchContent(dsi=FINANCES_DSI)),
            DimensionDef(di="Size", pair=pair("Size"), weight=1.0,
                         content=BranchContent(dsi=SIZE_DSI)),
        ),
    )


def bw_def() -> DomainSpaceDef:
    return DomainSpaceDef(
        dsi=BW_DSI,
        pair=pair("bodyweight"),
        owner=1,
        metric="M1",
        dimensions=(
            DimensionDef(di="date", pair=pair("date"), weight=1.0,
                         content=LeafContent(kind="date", date_format="yyyy-mm-dd")),
            DimensionDef(di="kg", pair=pair("weight", "kg"), weight=1.0,
                         content=LeafContent(kind="float-max")),
        ),
    )


def cupboard_registry() -> Registry:
    reg = Registry()
    for d in (finances_def(), size_def(), cupboard_def(), bw_def()):
        reg.register(d)
    return reg


# the 24 resources of the demo store, keyed by their record counter
CUPBOARD_ROWS = [
    # c, price, width, depth, height, keyword, comment
    (0, 175.40, 258, 30, 124, "ikea-IVAR", "3 Elem/Boeden/Schrank, Klefer"),
    (1, 99.00, 37, 40, 190, "Ikea-PS", ""),
    (2, 90.00, 50, 60, 236, "ikea-PAX-schmal", ""),
    (3, 199.00, 75, 44, 131, "ikea-ISALA", ""),
    (4, 199.00, 120, 50, 76, "ikea-TROLLSTA", "Sideboard"),
    (5, 170.00, 174, 30, 179, "ikea-IVAR", "2 Elem/ Boeden/Schrank"),
    (6, 362.90, 174, 50, 179, "ikea-IVAR", "2 Elem/ Schrank/Kommode"),
    (7, 532.70, 383, 50, 226, "ikea-IVAR", "5 Elem/ Boeden/Schrank"),
    (8, 258.90, 174, 50, 179, "ikea-IVAR", "2 Elem/ Boeden/Schrank"),
    (9, 59.00, 80, 30, 83, "ikea-IVAR", ""),
    (10, 130.00, 100, 60, 236, "ikea-PAX", "Schrank mit 2 Tueren, weiss, Ballstad weiss"),
    (11, 399.00, 181, 58, 210, "home24-Quadra",
     "schwebetuerenschrank, Korpus alpinweiss/Front alpinweiss"),
    (12, 449.00, 225, 58, 210, "home24-Quadra",
     "Schwebetuerenschrank, Korpus alpinweiss/Front alpinweiss"),
    (13, 499.00, 270, 58, 210, "home24-Quadra",
     "Schwebetuerenschrank, Korpus alpinweiss/Front alpinweiss"),
    (14, 599.00, 200, 65, 218, "home24-Mission-4",
     "Schwebetuerenschrank - Alpinweiss, Abs, Pearlglanz Softwhite"),
    (15, 599.00, 250, 65, 218, "home24-Mission-4",
     "Schwebetuerenschrank - Alpinweiss, Abs, Pearlglanz Softwhite"),
    (16, 899.00, 300, 65, 218, "home24-Mission-4",
     "Schwebetuerenschrank - Alpinweiss, Abs, Pearlglanz Softwhite"),
    (17, 1799.99, 163, 60, 197, "home24-Rivoli",
     "Kleiderschrank - mit Dekor - Fichte, antik lackiert, Standardeinteilung"),
    (18, 1099.00, 157, 57, 203, "home24-Maxi-Eleven",
     "Kleiderschrank - verschiedene Varianten - Erle Massiv"),
    (19, 659.00, 200, 68, 216, "home24-Lewisville",
     "Schwebetuerenschrank - verschiedene Groessen Polarweiss/Weisslack"),
    (20, 699.00, 250, 68, 216, "home24-Lewisville",
     "Schwebetuerenschrank - verschiedene Groessen Polarweiss/Weisslack"),
    (21, 799.00, 300, 68, 216, "home24-Lewisville",
     "Schwebetuerenschrank - verschiedene Groessen Polarweiss/Weisslack"),
    (22, 299.00, 150, 68, 216, "Home24-Austin",
     "Schwebetuerenschrank - verschiedene Groessen - Weiss mit Mattglas"),
    (23, 1099.99, 250, 63, 223, "RodrigoSchrank", ""),
]

# hit order of the demo search (sim Price=0): ascending price, ties by c
CUPBOARD_PRICE_ORDER = [9, 2, 1, 10, 5, 0, 3, 4, 8, 22, 6, 11, 12, 13, 7,
                        14, 15, 19, 20, 21, 16, 18, 23, 17]


def cupboard_dv_lines() -> list[str]:
    lines = []
    for c, price, width, depth, height, keyword, comment in CUPBOARD_ROWS:
        kc = f"{keyword}||{comment}" if comment else keyword
        lines.append(
            f'{CUPBOARD_DSI}; @kc="{kc}"; {price:.2f}; {width}; {depth}; {height}'
        )
    return lines


def cupboard_groups(registry: Registry):
    return [parse_dv_group(line, registry.flatten) for line in cupboard_dv_lines()]
