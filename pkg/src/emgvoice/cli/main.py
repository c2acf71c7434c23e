"""Command-line interface for the silent-speech pipeline.

Stage commands build on each other's cached artifacts inside the working
directory; ``run`` chains them.  Exit codes separate failure classes so
scripts can react: 2 for configuration problems (also click usage errors),
3 for data problems, 4 for numerical failures, 1 for anything else.
"""

import functools
import logging
import sys

import click

from ..errors import EmgVoiceError
from ..corpus.synthetic import generate_corpus
from . import stages
from .config import load_config, with_updates

EXIT_CODES = {"config": 2, "data": 3, "numeric": 4}

log = logging.getLogger("emgvoice")


def _handled(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kw):
        try:
            return fn(*args, **kw)
        except EmgVoiceError as exc:
            click.echo("error (%s): %s" % (exc.category, exc), err=True)
            sys.exit(EXIT_CODES.get(exc.category, 1))

    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="TOML configuration file.")
@click.option("--workdir", default=None, help="Artifact directory.")
@click.option("--manifest", default=None, help="Corpus manifest path.")
@click.option("--seed", type=int, default=None, help="Pipeline random seed.")
@click.option("--workers", type=int, default=None,
              help="Thread count for per-utterance work (0 = CPU count).")
@click.option("--set", "overrides", multiple=True, metavar="FIELD=VALUE",
              help="Override any config field, e.g. transducer.epochs=8.")
@click.option("-v", "--verbose", count=True, help="More logging (-vv for debug).")
@click.pass_context
@_handled
def main(ctx, config_path, workdir, manifest, seed, workers, overrides, verbose):
    """Silent-speech EMG-to-audio pipeline."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(
        stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s"
    )
    cfg = load_config(config_path, overrides=overrides)
    cfg = with_updates(
        cfg, workdir=workdir, manifest=manifest, seed=seed, workers=workers
    )
    ctx.obj = cfg


def _stage_command(name, help_text):
    @main.command(name, help=help_text)
    @click.option("--force", is_flag=True, help="Recompute even if up to date.")
    @click.pass_obj
    @_handled
    def command(cfg, force):
        fn = getattr(stages, "stage_" + name)
        result = fn(cfg, force=force)
        if name == "evaluate" and result is not None:
            click.echo(result.render())

    return command


_stage_command("preprocess", "Split the corpus and condition all signals.")
_stage_command("featurize", "Extract EMG and speech features; fit normalizers.")
_stage_command("align", "Fit the cross-mode projection and align parallel pairs.")
_stage_command("train", "Train the transducer (and waveform model if configured).")
_stage_command("synthesize", "Generate audio for held-out silent utterances.")
_stage_command("evaluate", "Transcribe synthesized audio and score word errors.")


@main.command("run", help="Run every stage in order.")
@click.option("--through", default="evaluate",
              type=click.Choice(stages.STAGE_ORDER), help="Stop after this stage.")
@click.option("--force", is_flag=True, help="Recompute everything.")
@click.pass_obj
@_handled
def run(cfg, through, force):
    result = stages.run_pipeline(cfg, through=through, force=force)
    if through == "evaluate" and result is not None:
        click.echo(result.render())


@main.command("ablate", help="Re-run the pipeline over data or electrode subsets.")
@click.option("--fraction", "fractions", multiple=True, type=float,
              help="Training data fraction to try (repeatable).")
@click.option("--drop-electrodes", "drops", multiple=True, metavar="N[,N...]",
              help="1-based electrode positions to remove (repeatable).")
@click.option("--force", is_flag=True)
@click.pass_obj
@_handled
def ablate(cfg, fractions, drops, force):
    electrode_sets = []
    for spec in drops:
        try:
            electrode_sets.append(tuple(int(v) for v in spec.split(",")))
        except ValueError:
            raise click.UsageError("--drop-electrodes expects integers like 5,7,8")
    rows = stages.run_ablation(
        cfg, fractions=fractions, electrode_sets=electrode_sets, force=force
    )
    click.echo("%-22s %10s %6s" % ("setting", "WER", "n"))
    for row in rows:
        click.echo(
            "%-22s %9.1f%% %6d"
            % (row["setting"], 100 * row["aggregate_wer"], row["n_utterances"])
        )


@main.command("make-corpus", help="Generate a synthetic corpus for pipeline tests.")
@click.argument("out_dir", type=click.Path())
@click.option("--pairs", default=15, show_default=True,
              help="Parallel silent/vocalized pairs.")
@click.option("--extra-vocalized", default=0, show_default=True,
              help="Non-parallel vocalized utterances.")
@click.option("--sessions", default=2, show_default=True)
@click.option("--seed", default=0, show_default=True)
@_handled
def make_corpus(out_dir, pairs, extra_vocalized, sessions, seed):
    path = generate_corpus(
        out_dir,
        n_pairs=pairs,
        n_nonparallel=extra_vocalized,
        n_sessions=sessions,
        seed=seed,
    )
    click.echo(path)


if __name__ == "__main__":
    main()
