"""Command line interface: serve, measure (batch), inspect, bench."""

from __future__ import annotations

import json
import sys
import time

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

import click
import numpy as np

from . import session as session_io
from .errors import VfError
from .geodesy import GeodeticCoord
from .measure import MeasurementSession
from .scene import Scene
from .service import _parse_ray, create_app
from .spatial import warm_up
from .tileset import decode_content, fetch_uri, parse_tileset, select_max_detail


@click.group()
def main():
    """Virtual fieldwork measurement engine."""


def _load_scene(tileset_uris) -> Scene:
    scene = Scene()
    for uri in tileset_uris:
        tileset_id = scene.register_tileset(uri)
        click.echo(f"registered {uri} as {tileset_id}", err=True)
    return scene


@main.command()
@click.option("--port", type=int, envvar="VFIELD_PORT", default=8000,
              show_default=True, help="listen port (env: VFIELD_PORT)")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--tileset", "tilesets", multiple=True, help="tileset uri to preload")
@click.option("--config", type=click.Path(exists=True),
              help="TOML file with a tilesets = [...] preload list")
@click.option("--multi-session", is_flag=True, help="enable ?session= selector")
def serve(port, host, tilesets, config, multi_session):
    """Run the HTTP service."""
    import uvicorn

    uris = list(tilesets)
    if config:
        with open(config, "rb") as f:
            uris.extend(tomllib.load(f).get("tilesets", []))
    try:
        scene = _load_scene(uris)
    except VfError as exc:
        raise click.ClickException(f"{exc.code}: {exc}")
    app = create_app(scene, multi_session=multi_session)
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("--tileset", "tilesets", multiple=True, required=True)
@click.option("--script", type=click.Path(exists=True), required=True,
              help="JSON: {markers: [{ray}|{geodetic}], measurements: [...]}")
@click.option("-o", "--output", type=click.Path(), default="-",
              help="session document destination (default stdout)")
def measure(tilesets, script, output):
    """Headless batch run: markers + measurement specs in, session JSON out.

    Script format: {"markers": [{"ray": {"origin": [...], "direction": [...]}}
    or {"geodetic": {"lat_deg", "lon_deg", "height_m"}}, ...],
    "measurements": [{"type": "distance"|"strike_dip"|"clip_box",
    "marker_indices": [0, 1, ...]}, ...]}.
    """
    with open(script) as f:
        spec = json.load(f)
    try:
        scene = _load_scene(tilesets)
        session = MeasurementSession(scene=scene)
        markers = []
        for entry in spec.get("markers", []):
            if "ray" in entry:
                markers.append(session.place_marker(_parse_ray(entry["ray"])))
            else:
                g = entry["geodetic"]
                markers.append(session.add_marker_at(GeodeticCoord(
                    g["lat_deg"], g["lon_deg"], g.get("height_m", 0.0))))
        for entry in spec.get("measurements", []):
            ids = [markers[i].id for i in entry["marker_indices"]]
            if entry["type"] == "distance":
                session.measure_distance(ids)
            elif entry["type"] == "strike_dip":
                session.measure_strike_dip(ids)
            elif entry["type"] == "clip_box":
                session.measure_clip_box(ids)
            else:
                raise click.ClickException(f"unknown measurement type {entry['type']!r}")
    except VfError as exc:
        raise click.ClickException(f"{exc.code}: {exc}")
    data = session_io.export_session(session)
    if output == "-":
        sys.stdout.buffer.write(data + b"\n")
    else:
        with open(output, "wb") as f:
            f.write(data)


@main.command()
@click.argument("tileset_uri")
def inspect(tileset_uri):
    """Print tree statistics and triangle counts for a tileset."""
    try:
        tree = parse_tileset(fetch_uri(tileset_uri), tileset_uri, resolver=fetch_uri)

        def count_nodes(node):
            return 1 + sum(count_nodes(c) for c in node.children)

        nodes = select_max_detail(tree)
        click.echo(f"source: {tree.source_uri}")
        click.echo(f"root geometric error: {tree.geometric_error_root}")
        click.echo(f"tiles total: {count_nodes(tree.root)}")
        click.echo(f"tiles at max detail: {len(nodes)}")
        total = 0
        for node in nodes:
            mesh = decode_content(fetch_uri(node.content_uri), node)
            total += mesh.n_triangles
            click.echo(
                f"  {node.content_uri}: {mesh.n_triangles} triangles, "
                f"{len(mesh.positions)} vertices, "
                f"{mesh.dropped_degenerate} degenerate dropped"
            )
        click.echo(f"triangles total: {total}")
    except VfError as exc:
        raise click.ClickException(f"{exc.code}: {exc}")


@main.group()
def bench():
    """Performance measurements."""


@bench.command("raycast")
@click.option("--tileset", "tilesets", multiple=True, required=True)
@click.option("--rays", "n_rays", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def bench_raycast(tilesets, n_rays, seed):
    """Report BVH build time, hit rate and raycast latency percentiles."""
    from .geodesy import EcefVec, ecef_to_geodetic, enu_frame_at
    from .spatial import Ray

    warm_up()  # JIT-compile kernels before timing
    try:
        meshes = []
        from .scene import load_tileset_meshes

        for uri in tilesets:
            meshes.extend(load_tileset_meshes(uri))
        t0 = time.perf_counter()
        from .spatial import build_bvh

        bvh = build_bvh(meshes)
        build_s = time.perf_counter() - t0
    except VfError as exc:
        raise click.ClickException(f"{exc.code}: {exc}")

    # rays from 2 km above random surface triangles, straight down
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, bvh.n_triangles, size=n_rays)
    targets = (bvh.v0[picks] + bvh.v1[picks] + bvh.v2[picks]) / 3.0
    rays = []
    for target in targets:
        g = ecef_to_geodetic(EcefVec.from_array(target))
        frame = enu_frame_at(g)
        origin = EcefVec.from_array(target + 2000.0 * frame.up)
        rays.append(Ray(origin, -frame.up, t_max=1e7))

    latencies = np.empty(n_rays)
    hits = 0
    for i, ray in enumerate(rays):
        t0 = time.perf_counter()
        hit = bvh.raycast(ray)
        latencies[i] = time.perf_counter() - t0
        if hit is not None:
            hits += 1

    stats = {
        "triangles": int(bvh.n_triangles),
        "build_s": build_s,
        "rays": n_rays,
        "hit_rate": hits / n_rays,
        "latency_us": {
            "p50": float(np.percentile(latencies, 50) * 1e6),
            "p90": float(np.percentile(latencies, 90) * 1e6),
            "p99": float(np.percentile(latencies, 99) * 1e6),
            "mean": float(latencies.mean() * 1e6),
        },
    }
    click.echo(json.dumps(stats, indent=2))
