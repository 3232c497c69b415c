"""Command-line tools: serve, define, ingest, index, search, bench, rdf."""
from __future__ import annotations

import sys
import urllib.request
from pathlib import Path

import click

from .bench import run_bench
from .codec import decode_value, serialize_dv_group
from .errors import DspaceError
from .rdf import dvs_to_triples, read_ntriples, triples_to_dvs, write_ntriples
from .schema import LeafContent, serialize_ds_definition
from .search import DimQuery, SearchRequest, result_to_json
from .service import to_json_bytes
from .store import Store


@click.group()
@click.option("--data-dir", envvar="DSPACE_DATA_DIR", default="dspace-data",
              show_default=True, help="store directory")
@click.pass_context
def main(ctx, data_dir):
    """Metric-space search over web-defined domain spaces."""
    ctx.ensure_object(dict)
    ctx.obj["data_dir"] = data_dir


def _store(ctx) -> Store:
    return Store(ctx.obj["data_dir"])


def _fail(e: DspaceError):
    click.echo(f"error: {e}", err=True)
    sys.exit(1)


@main.command()
@click.option("--listen", default="127.0.0.1:8080", show_default=True,
              help="host:port to bind")
@click.pass_context
def serve(ctx, listen):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    host, _, port = listen.partition(":")
    app = create_app(_store(ctx))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8080), log_level="warning")


@main.command()
@click.argument("source")
@click.option("--owner", type=int, default=None, help="acting owner id")
@click.option("--fetch", is_flag=True, help="treat SOURCE as a URL to download")
@click.pass_context
def define(ctx, source, owner, fetch):
    """Register a domain space definition from FILE (or URL with --fetch)."""
    try:
        if fetch:
            with urllib.request.urlopen(source) as resp:
                document = resp.read().decode("utf-8")
        else:
            document = Path(source).read_text(encoding="utf-8")
        info = _store(ctx).register_definition(document, actor=owner)
    except DspaceError as e:
        _fail(e)
    except OSError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)
    click.echo(f"registered {info['dsi']} (id {info['id']}, version {info['version']})")
    click.echo(f"checksum {info['checksum']}")


@main.command()
@click.argument("path")
@click.pass_context
def ingest(ctx, path):
    """Append DV lines from FILE, or every *.dv file under a directory."""
    store = _store(ctx)
    p = Path(path)
    files = sorted(p.glob("**/*.dv")) if p.is_dir() else [p]
    total = 0
    try:
        for f in files:
            total += store.ingest_file(f)
    except DspaceError as e:
        _fail(e)
    click.echo(f"ingested {total} group(s) from {len(files)} file(s)")


@main.command()
@click.pass_context
def index(ctx):
    """Rebuild the synchronized index snapshot."""
    try:
        report = _store(ctx).build_snapshot()
    except DspaceError as e:
        _fail(e)
    click.echo(
        f"indexed {report['groups']} group(s), {report['records']} record(s), "
        f"{report['rejected']} rejected"
    )


def _parse_assignment(raw: str) -> tuple[str, str]:
    path, sep, value = raw.partition("=")
    if not sep:
        raise click.BadParameter(f"expected path=value, got {raw!r}")
    return path, value


def _encode_for(store: Store, dsi: str, path: str, raw: str) -> float:
    if path == "@owner":
        return float(int(raw))
    flat = store.registry.flatten(dsi)
    leaf = flat.resolve_path(path)
    from .codec import encode_value

    return encode_value(leaf.defn, raw)


@main.command()
@click.option("--ds", "ds_ref", required=True, help="DSI or local id")
@click.option("--sim", multiple=True, help="path=value similarity target")
@click.option("--min", "min_", multiple=True, help="path=value lower bound")
@click.option("--max", "max_", multiple=True, help="path=value upper bound")
@click.option("--g", "g_", multiple=True, help="path to include in stats/plot")
@click.option("--word", multiple=True, help="path=word text condition")
@click.option("--tux", multiple=True, help="path=prefix tux condition")
@click.option("--pcnt", default=1000, show_default=True)
@click.option("--offered/--no-offered", "offered", default=None)
@click.option("--wanted/--no-wanted", "wanted", default=None)
@click.option("--json", "as_json", is_flag=True, help="print the raw result JSON")
@click.pass_context
def search(ctx, ds_ref, sim, min_, max_, g_, word, tux, pcnt, offered, wanted, as_json):
    """Similarity/range search in one domain space."""
    store = _store(ctx)
    try:
        dsi = store.registry.resolve(ds_ref)
        spec: dict[str, dict] = {}

        def slot(path):
            return spec.setdefault(path, {})

        for raw in sim:
            path, value = _parse_assignment(raw)
            slot(path)["sim"] = _encode_for(store, dsi, path, value)
        for raw in min_:
            path, value = _parse_assignment(raw)
            slot(path)["min"] = _encode_for(store, dsi, path, value)
        for raw in max_:
            path, value = _parse_assignment(raw)
            slot(path)["max"] = _encode_for(store, dsi, path, value)
        for raw in word:
            path, value = _parse_assignment(raw)
            slot(path)["word"] = value
        for raw in tux:
            path, value = _parse_assignment(raw)
            slot(path)["tux"] = value
        for path in g_:
            slot(path)["g"] = True
        req = SearchRequest(
            dsi=dsi,
            dims=tuple(DimQuery(path=p, **kw) for p, kw in spec.items()),
            offered=offered,
            wanted=wanted,
            pcnt=pcnt,
        )
        result = store.search(req)
    except DspaceError as e:
        _fail(e)
    if as_json:
        sys.stdout.buffer.write(to_json_bytes(result_to_json(result)) + b"\n")
        return
    _print_table(store, dsi, req, result)


def _print_table(store: Store, dsi: str, req: SearchRequest, result) -> None:
    flat = store.registry.flatten(dsi)
    paths = []
    for q in req.dims:
        if (q.searched or q.g) and q.path not in paths:
            paths.append(q.path)
    resolved = [flat.resolve_path(p).path if p != "@owner" else p for p in paths]
    header = ["c", "d", "a", "keyword", "comment"] + resolved
    rows = [header]
    for h in result.hits:
        row = [str(h.c), _fmt_number(h.d), str(h.a), h.kw0, h.comment]
        for p in resolved:
            v = h.values.get(p)
            if v is None:
                row.append("")
            elif isinstance(v, str):
                row.append(v)
            else:
                row.append(_decode_cell(flat, p, float(v)))
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    for i, row in enumerate(rows):
        click.echo("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            click.echo("  ".join("-" * w for w in widths))
    for path, st in result.stats.items():
        click.echo(
            f"{path}: av= {_fmt_number(st.av)} sd= {_fmt_number(st.sd)} "
            f"min= {_fmt_number(st.min)} max= {_fmt_number(st.max)}"
        )
    click.echo(f"{len(result.hits)} of {result.total} match(es)")


def _decode_cell(flat, path, value: float) -> str:
    if path == "@owner":
        return str(int(value))
    leaf = flat.resolve_path(path)
    if isinstance(leaf.defn.content, LeafContent) and leaf.defn.content.kind != "text":
        try:
            return decode_value(leaf.defn, value)
        except DspaceError:
            return _fmt_number(value)
    return _fmt_number(value)


def _fmt_number(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else f"{v:g}"


@main.command()
@click.option("--dims", default=64, show_default=True)
@click.option("--dvs", default=100_000, show_default=True)
@click.option("--searches", default=20, show_default=True)
@click.option("--seed", default=1, show_default=True)
@click.option("--max-d", default=10, show_default=True)
@click.option("--no-kernel-comparison", is_flag=True)
@click.option("--json", "as_json", is_flag=True)
def bench(dims, dvs, searches, seed, max_d, no_kernel_comparison, as_json):
    """Synthetic-store benchmark over search dimensionality 1..max-d."""
    report = run_bench(dims=dims, dvs=dvs, searches=searches, seed=seed, max_d=max_d,
                       kernel_comparison=not no_kernel_comparison)
    if as_json:
        sys.stdout.buffer.write(to_json_bytes(report.to_json()) + b"\n")
        return
    click.echo(f"store: {report.dims} dims x {report.dvs} DVs "
               f"(seed {report.seed}, backend {report.backend})")
    click.echo("d   mean_ms   columns_read   hits")
    for p in report.points:
        click.echo(f"{p.d:<3} {p.mean_ms:>8.2f}   {p.columns_read:>12}   {p.hits}")
    for name, ms in report.kernel_comparison.items():
        click.echo(f"{name}: {ms:.3f} ms")


@main.group()
def rdf():
    """Triple store import/export."""


@rdf.command("import")
@click.argument("file")
@click.pass_context
def rdf_import(ctx, file):
    """Import an N-Triples FILE as generated spaces plus DV groups."""
    store = _store(ctx)
    try:
        triples = read_ntriples(Path(file).read_text(encoding="utf-8"))
        spaces, groups = triples_to_dvs(triples)
        for space in spaces:
            if space.dsi not in store.registry:
                store.register_definition(serialize_ds_definition(space))
        for group in groups:
            store.ingest_line(serialize_dv_group(group, store.registry.flatten))
    except DspaceError as e:
        _fail(e)
    click.echo(f"imported {len(triples)} triple(s) as {len(groups)} group(s) "
               f"in {len(spaces)} space(s)")


@rdf.command("export")
@click.argument("file")
@click.pass_context
def rdf_export(ctx, file):
    """Export bridge-generated groups back to an N-Triples FILE."""
    store = _store(ctx)
    try:
        spaces = [store.registry.get(dsi) for dsi in store.registry.dsis()
                  if dsi.startswith("urn:dspace:rdf")]
        bridge_dsis = {s.dsi for s in spaces}
        groups = [g for g in store.groups
                  if any(m.dsi in bridge_dsis for m in g.members)]
        triples = dvs_to_triples(spaces, groups)
        Path(file).write_text(write_ntriples(triples), encoding="utf-8")
    except DspaceError as e:
        _fail(e)
    click.echo(f"exported {len(triples)} triple(s)")


if __name__ == "__main__":
    main()
