from typing import Optional, TextIO

import click

from ..click_custom import CustomCommand
from ..container import write_container
from ..exceptions import DuplicateIdError, GenViewError, InvalidValueError
from ..generation import GeneratorRequest, derive_rng, make_request
from ..options import common_options
from ..output import echo_success
from ..records import REQUEST_COLUMNS, AnalysisRow, read_analysis, write_table
from ..state import State, pass_state
from ..utils import color_path, load_container, map_in_order, to_click_exception


@click.group()
def cli() -> None:  # noqa: D103
    pass


@cli.command(
    cls=CustomCommand,
    help_options_color="cyan",
    short_help="Noise embeddings into generator requests.",
)
@click.argument("embeddings", type=click.Path(exists=True, dir_okay=False))
@click.argument("analysis", type=click.File("r", encoding="utf-8"))
@click.option(
    "-o",
    "--out",
    type=click.Path(dir_okay=False, writable=True),
    metavar="PATH",
    required=True,
    help="Path of the container of noised embeddings.",
)
@click.option(
    "--sidecar",
    type=click.Path(dir_okay=False, writable=True),
    metavar="PATH",
    help="Path of the request metadata table. [default: OUT.tsv]",
)
@click.option(
    "-j",
    "--jobs",
    type=click.IntRange(min=1),
    default=1,
    show_default=True,
    help="Number of worker threads.",
)
@common_options
@pass_state
def perturb(
    state: State,
    embeddings: str,
    analysis: TextIO,
    out: str,
    sidecar: Optional[str],
    jobs: int,
) -> None:
    """Apply the forward diffusion to every embedding listed in ANALYSIS.

    Each embedding of EMBEDDINGS is noised to the level in the ``l`` column
    of ANALYSIS. The noised embeddings go to OUT, the remaining request
    fields to a TSV sidecar.
    """
    config = state.load_config()
    tensors = load_container(embeddings)
    try:
        schedule = config.noise_schedule()
        rows = read_analysis(analysis)
    except GenViewError as e:
        raise to_click_exception(e)
    ids = [row.sample_id for row in rows]
    if len(set(ids)) != len(ids):
        duplicate = next(i for i in ids if ids.count(i) > 1)
        raise to_click_exception(DuplicateIdError(f"duplicate id '{duplicate}'"))

    def request(sample_id: str, row: AnalysisRow) -> GeneratorRequest:
        if sample_id not in tensors:
            raise InvalidValueError("no embedding with this id")
        return make_request(
            sample_id,
            tensors[sample_id],
            row.l,
            schedule,
            derive_rng(config.seed, "perturb", sample_id),
            denoising_steps=config["request.T"],
            guidance_scale=config["request.guidance"],
            generator_tag=config["request.generator"],
        )

    requests = map_in_order(request, [(row.sample_id, row) for row in rows], jobs)
    write_container(out, {r.sample_id: r.noised_embedding for r in requests})

    sidecar = sidecar or f"{out}.tsv"
    with open(sidecar, "w", encoding="utf-8", newline="") as stream:
        write_table(
            stream,
            REQUEST_COLUMNS,
            (
                (
                    r.sample_id,
                    r.noise_level,
                    r.denoising_steps,
                    r.guidance_scale,
                    r.latent_seed,
                    r.generator_tag,
                )
                for r in requests
            ),
        )
    echo_success(
        f"{len(requests)} requests written. "
        f"({color_path(out)}, {color_path(sidecar)})"
    )

