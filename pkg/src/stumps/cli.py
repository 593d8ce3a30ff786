"""Thin client CLI: every subcommand posts to the stumps service.

By default an in-process service instance is used (same filesystem); pass
``--server URL`` to target a running ``stumps serve`` instance.

A config file (``--config``) holds ``key=value`` lines; ``subcommand.key``
scopes a value to one subcommand. Precedence: command-line flag, then config
file, then built-in default.
"""
from __future__ import annotations

import asyncio
import json
import sys

import click
import httpx

EXIT_RUNTIME = 1
EXIT_VALIDATION = 2


def _post(server: str | None, path: str, payload: dict) -> dict:
    async def call() -> httpx.Response:
        if server:
            async with httpx.AsyncClient(base_url=server, timeout=600.0) as client:
                return await client.post(path, json=payload)
        from .service import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://stumps.internal", timeout=600.0
        ) as client:
            return await client.post(path, json=payload)

    try:
        response = asyncio.run(call())
    except httpx.HTTPError as exc:
        click.echo(f"error: cannot reach service: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    if response.status_code in (400, 422):
        detail = response.json().get("detail")
        click.echo(f"error: {detail}", err=True)
        sys.exit(EXIT_VALIDATION)
    if response.status_code != 200:
        try:
            detail = response.json().get("detail")
        except ValueError:
            detail = response.text
        click.echo(f"error: {detail}", err=True)
        sys.exit(EXIT_RUNTIME)
    return response.json()


def _parse_value(raw: str):
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    return raw.strip()


def _load_config(ctx: click.Context, _param, value):
    if not value:
        return value
    flat: dict[str, object] = {}
    scoped: dict[str, dict[str, object]] = {}
    with open(value, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, raw = line.split("=", 1)
            key = key.strip()
            if "." in key:
                cmd, opt = key.split(".", 1)
                scoped.setdefault(cmd, {})[opt.replace("-", "_")] = _parse_value(raw)
            else:
                flat[key.replace("-", "_")] = _parse_value(raw)
    default_map: dict[str, dict] = {}
    for cmd in main.commands:
        default_map[cmd] = dict(flat)
        default_map[cmd].update(scoped.get(cmd, {}))
    ctx.default_map = default_map
    return value


@click.group()
@click.option("--server", default=None, help="Service URL; default runs in-process.")
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    callback=_load_config,
    expose_value=False,
    is_eager=True,
    help="key=value config file (flag > config > default).",
)
@click.pass_context
def main(ctx: click.Context, server: str | None):
    """Align cricket video descriptors with text commentary and serve
    searchable shot-level annotations."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


def _emit(result: dict) -> None:
    click.echo(json.dumps(result, sort_keys=True))


@main.command()
@click.option("--out", "out_dir", required=True, help="Output directory.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--scenes", default=20, show_default=True, type=int)
@click.option("--hard", is_flag=True, help="Overlapping emissions (stress data).")
@click.option("--cover-all-categories", is_flag=True, help="Force every scene category to appear.")
@click.option("--match-id", default="synth", show_default=True)
@click.pass_context
def synth(ctx, out_dir, seed, scenes, hard, cover_all_categories, match_id):
    """Generate a ground-truthed synthetic match."""
    _emit(
        _post(
            ctx.obj["server"],
            "/synth",
            {
                "out_dir": out_dir,
                "seed": seed,
                "scenes": scenes,
                "hard": hard,
                "cover_all_categories": cover_all_categories,
                "match_id": match_id,
            },
        )
    )


@main.command("train-text")
@click.option("--commentary", required=True)
@click.option("--model-out", required=True)
@click.option("--vocab-out", required=True)
@click.option("--min-df", default=2, show_default=True, type=int)
@click.option("--lam", default=1e-4, show_default=True, type=float, help="Hinge-loss regularization.")
@click.option("--epochs", default=50, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--dump", "dump_path", default=None, help="Optional labelled-phrase JSONL dump.")
@click.option("--match-id", default="match", show_default=True)
@click.pass_context
def train_text(ctx, commentary, model_out, vocab_out, min_df, lam, epochs, seed, dump_path, match_id):
    """Train the phrase classifier from auto-labelled commentary."""
    _emit(
        _post(
            ctx.obj["server"],
            "/train/text",
            {
                "commentary": commentary,
                "model_out": model_out,
                "vocab_out": vocab_out,
                "min_df": min_df,
                "lam": lam,
                "epochs": epochs,
                "seed": seed,
                "dump_path": dump_path,
                "match_id": match_id,
            },
        )
    )


@main.command("train-shots")
@click.option("--descriptors", required=True)
@click.option("--truth", required=True)
@click.option("--svm-out", required=True)
@click.option("--crf-out", required=True)
@click.option("--lam", default=1e-4, show_default=True, type=float)
@click.option("--epochs", default=50, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--pseudo-count", default=1.0, show_default=True, type=float)
@click.pass_context
def train_shots(ctx, descriptors, truth, svm_out, crf_out, lam, epochs, seed, pseudo_count):
    """Train the shot classifier and the label-transition model."""
    _emit(
        _post(
            ctx.obj["server"],
            "/train/shots",
            {
                "descriptors": descriptors,
                "truth": truth,
                "svm_out": svm_out,
                "crf_out": crf_out,
                "lam": lam,
                "epochs": epochs,
                "seed": seed,
                "pseudo_count": pseudo_count,
            },
        )
    )


@main.command("train-scenes")
@click.option("--descriptors", required=True)
@click.option("--truth", required=True)
@click.option("--out", required=True)
@click.option("--pseudo-count", default=1.0, show_default=True, type=float)
@click.pass_context
def train_scenes(ctx, descriptors, truth, out, pseudo_count):
    """Learn per-outcome scene models from labelled scenes."""
    _emit(
        _post(
            ctx.obj["server"],
            "/train/scenes",
            {"descriptors": descriptors, "truth": truth, "out": out, "pseudo_count": pseudo_count},
        )
    )


@main.command("detect-shots")
@click.option("--descriptors", required=True)
@click.option("--out", required=True)
@click.option("--window", "-w", default=10, show_default=True, type=int)
@click.option("--threshold", "--tau", default=0.4, show_default=True, type=float)
@click.option("--min-shot-len", default=10, show_default=True, type=int)
@click.pass_context
def detect_shots(ctx, descriptors, out, window, threshold, min_shot_len):
    """Window-based shot over-segmentation."""
    _emit(
        _post(
            ctx.obj["server"],
            "/detect-shots",
            {
                "descriptors": descriptors,
                "out": out,
                "window": window,
                "threshold": threshold,
                "min_shot_len": min_shot_len,
            },
        )
    )


@main.command()
@click.option("--descriptors", required=True)
@click.option("--commentary", required=True)
@click.option("--scene-models", required=True)
@click.option("--out", required=True)
@click.option("--shots", default=None, help="Shot list supplying candidate boundaries.")
@click.option("--every-m-frames", default=0, show_default=True, type=int,
              help="Use every m-th frame as a candidate instead of shot boundaries.")
@click.option("--literal-costs", is_flag=True, help="Maximize raw posterior sums.")
@click.option("--objective", default="joint", show_default=True,
              type=click.Choice(["joint", "posterior"]),
              help="Per-segment score: likelihood plus posterior, or posterior only.")
@click.option("--threads", default=1, show_default=True, type=int)
@click.pass_context
def segment(ctx, descriptors, commentary, scene_models, out, shots, every_m_frames,
            literal_costs, objective, threads):
    """DP scene segmentation against the commentary's category sequence."""
    _emit(
        _post(
            ctx.obj["server"],
            "/segment",
            {
                "descriptors": descriptors,
                "commentary": commentary,
                "scene_models": scene_models,
                "out": out,
                "shots": shots,
                "every_m_frames": every_m_frames,
                "literal_costs": literal_costs,
                "objective": objective,
                "threads": threads,
            },
        )
    )


@main.command()
@click.option("--descriptors", required=True)
@click.option("--shots", required=True)
@click.option("--svm-model", required=True)
@click.option("--crf-model", required=True)
@click.option("--out", required=True)
@click.option("--mode", default="viterbi", show_default=True,
              type=click.Choice(["viterbi", "max_marginal", "raw", "literal"]))
@click.pass_context
def smooth(ctx, descriptors, shots, svm_model, crf_model, out, mode):
    """Classify shots and smooth labels with the transition model."""
    _emit(
        _post(
            ctx.obj["server"],
            "/smooth",
            {
                "descriptors": descriptors,
                "shots": shots,
                "svm_model": svm_model,
                "crf_model": crf_model,
                "out": out,
                "mode": mode,
            },
        )
    )


@main.command()
@click.option("--descriptors", required=True)
@click.option("--commentary", required=True)
@click.option("--segments", required=True)
@click.option("--labels", required=True)
@click.option("--text-model", required=True)
@click.option("--vocab", required=True)
@click.option("--store", required=True)
@click.option("--match-id", default="match", show_default=True)
@click.option("--radius", "-R", default=10, show_default=True, type=int)
@click.option("--others-threshold", default=0.6, show_default=True, type=float)
@click.pass_context
def annotate(ctx, descriptors, commentary, segments, labels, text_model, vocab, store,
             match_id, radius, others_threshold):
    """Map classified phrases onto action shots and append to the store."""
    _emit(
        _post(
            ctx.obj["server"],
            "/annotate",
            {
                "descriptors": descriptors,
                "commentary": commentary,
                "segments": segments,
                "labels": labels,
                "text_model": text_model,
                "vocab": vocab,
                "store": store,
                "match_id": match_id,
                "radius": radius,
                "others_threshold": others_threshold,
            },
        )
    )


@main.command("eval")
@click.option("--truth", required=True)
@click.option("--segments", required=True)
@click.option("--labels", required=True)
@click.option("--radii", default="2,4,6,8,10", show_default=True,
              help="Comma-separated R values for the recall table.")
@click.pass_context
def eval_cmd(ctx, truth, segments, labels, radii):
    """Print scene accuracy, the shot confusion matrix and the recall table."""
    radii_list = [int(v) for v in radii.split(",") if v.strip()]
    result = _post(
        ctx.obj["server"],
        "/eval",
        {"truth": truth, "segments": segments, "labels": labels, "radii": radii_list},
    )
    click.echo(result["report"])


@main.command()
@click.option("--store", required=True)
@click.option("--text", required=True)
@click.option("--top-k", default=10, show_default=True, type=int)
@click.pass_context
def query(ctx, store, text, top_k):
    """TF-IDF search over stored annotations."""
    result = _post(
        ctx.obj["server"], "/query", {"store": store, "text": text, "top_k": top_k}
    )
    for hit in result["hits"]:
        click.echo(json.dumps(hit, sort_keys=True))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the service with uvicorn."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
