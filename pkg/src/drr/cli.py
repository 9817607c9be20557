"""Command-line surface for the full pipeline."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .critic import (
    AlwaysAccept,
    AlwaysReject,
    Critic,
    LinearCritic,
    OracleCritic,
    RemoteCritic,
    TrainHyper,
    load_model,
    save_model,
    train_linear,
)
from .distill import DEFAULT_GENERATION_TURNS, distill_dataset, load_trace_file
from .errors import DrrError
from .inference import (
    DEFAULT_INFERENCE_TURNS,
    InferenceOutcome,
    infer_dataset,
    load_outcome_file,
)
from .metrics import score_outcomes
from .qa_data import Dataset, load_dataset
from .reasoner import (
    PromptStrategy,
    Reasoner,
    RemoteChatReasoner,
    ScriptedReasoner,
    StochasticSimReasoner,
)
from .trainprep import (
    DEFAULT_INSTRUCTION,
    downsample,
    export_training_file,
    records_to_examples,
    split,
)


def load_config(path: str | None) -> dict[str, str]:
    """key=value config file; blank lines and # comments ignored."""
    if not path:
        return {}
    cfg: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise click.UsageError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        cfg[key.strip()] = value.strip()
    return cfg


def resolve(flag, cfg: dict[str, str], key: str, default, cast=str):
    """Precedence: explicit flag > config file > default."""
    if flag is not None:
        return flag
    if key in cfg:
        return cast(cfg[key])
    return default


def write_manifest(out_dir: Path, command: str, settings: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"command": command, "version": __version__, "settings": settings}
    (out_dir / f"{command}.manifest.json").write_text(
        json.dumps(manifest, indent=2, default=str) + "\n", encoding="utf-8"
    )


def build_reasoner(backend: str, fixtures: str | None, p: float, seed: int,
                   endpoint: str | None, model: str | None, workers: int) -> Reasoner:
    if backend == "scripted":
        if not fixtures:
            raise click.UsageError("--fixtures is required with --backend scripted")
        return ScriptedReasoner.from_file(fixtures)
    if backend == "stochastic":
        return StochasticSimReasoner(p_correct=p, seed=seed)
    if backend == "remote":
        if not endpoint or not model:
            raise click.UsageError("--endpoint and --model are required with --backend remote")
        return RemoteChatReasoner(endpoint, model, max_in_flight=workers)
    raise click.UsageError(f"unknown backend {backend!r}")


def build_critic(spec: str, dataset: Dataset | None) -> Critic:
    if spec == "oracle":
        if dataset is None:
            raise click.UsageError("oracle critic needs a dataset with gold answers")
        return OracleCritic(dataset.gold_map())
    if spec == "accept":
        return AlwaysAccept()
    if spec == "reject":
        return AlwaysReject()
    if spec.startswith("linear:"):
        return LinearCritic(load_model(spec.split(":", 1)[1]))
    if spec.startswith("remote:"):
        return RemoteCritic(spec.split(":", 1)[1])
    raise click.UsageError(f"unknown critic {spec!r}")


@click.group()
@click.version_option(__version__)
def cli():
    """Iterative reasoning pipeline: distill traces, train a critic, infer, evaluate."""


config_option = click.option("--config", type=click.Path(exists=True), default=None,
                             help="key=value config file; flags override it.")


@cli.command("distill")
@config_option
@click.option("--dataset", type=click.Path(exists=True), default=None)
@click.option("--name", default=None, help="Dataset name (defaults to file stem).")
@click.option("--out", type=click.Path(), default=None, help="Output directory.")
@click.option("--backend", default=None, type=click.Choice(["scripted", "stochastic", "remote"]))
@click.option("--fixtures", type=click.Path(exists=True), default=None)
@click.option("--p", type=float, default=None, help="Stochastic backend accuracy.")
@click.option("--endpoint", default=None)
@click.option("--model", default=None)
@click.option("--strategy", default=None, type=click.Choice(["direct", "gradual"]))
@click.option("--max-turns", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--workers", type=int, default=None)
def cmd_distill(config, dataset, name, out, backend, fixtures, p, endpoint, model,
                strategy, max_turns, seed, workers):
    """Generate labeled traces for every question in a dataset."""
    cfg = load_config(config)
    dataset_path = resolve(dataset, cfg, "dataset", None)
    if not dataset_path:
        raise click.UsageError("--dataset is required")
    out_dir = Path(resolve(out, cfg, "out", "out"))
    backend = resolve(backend, cfg, "backend", "stochastic")
    strategy_kind = resolve(strategy, cfg, "strategy", "direct")
    max_turns = resolve(max_turns, cfg, "max_turns_generation", DEFAULT_GENERATION_TURNS, int)
    seed = resolve(seed, cfg, "seed", 0, int)
    workers = resolve(workers, cfg, "workers", 4, int)
    p = resolve(p, cfg, "p", 0.5, float)
    fixtures = resolve(fixtures, cfg, "fixtures", None)
    endpoint = resolve(endpoint, cfg, "endpoint", None)
    model = resolve(model, cfg, "model", None)

    data = load_dataset(dataset_path, resolve(name, cfg, "name", None))
    reasoner = build_reasoner(backend, fixtures, p, seed, endpoint, model, workers)
    out_dir.mkdir(parents=True, exist_ok=True)
    traces_path = out_dir / f"{data.name}.traces.jsonl"
    summary = distill_dataset(data, reasoner, PromptStrategy.named(strategy_kind),
                              max_turns, traces_path, workers)
    settings = {"dataset": str(dataset_path), "backend": backend, "strategy": strategy_kind,
                "max_turns": max_turns, "seed": seed, "p": p, "workers": workers,
                "traces": str(traces_path)}
    write_manifest(out_dir, "distill", settings)
    (out_dir / f"{data.name}.distill-summary.json").write_text(
        json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    click.echo(json.dumps(summary))


@cli.command("prepare")
@config_option
@click.option("--traces", "traces_paths", type=click.Path(exists=True), multiple=True,
              required=True, help="Trace file; repeat per source dataset.")
@click.option("--dataset", "dataset_paths", type=click.Path(exists=True), multiple=True,
              required=True, help="Matching QA dataset, in the same order as --traces.")
@click.option("--out", type=click.Path(), default=None)
@click.option("--reject-per-accept", type=float, default=None)
@click.option("--train-fraction", type=float, default=None)
@click.option("--strategy", default=None, type=click.Choice(["direct", "gradual"]))
@click.option("--instruction", default=None)
@click.option("--seed", type=int, default=None)
def cmd_prepare(config, traces_paths, dataset_paths, out, reject_per_accept,
                train_fraction, strategy, instruction, seed):
    """Render traces into critic training data with a per-dataset 80/20 split."""
    cfg = load_config(config)
    if len(traces_paths) != len(dataset_paths):
        raise click.UsageError("--traces and --dataset must be given the same number of times")
    out_dir = Path(resolve(out, cfg, "out", "out"))
    ratio = resolve(reject_per_accept, cfg, "reject_per_accept", 1.0, float)
    fraction = resolve(train_fraction, cfg, "train_fraction", 0.8, float)
    seed = resolve(seed, cfg, "seed", 0, int)
    strategy_kind = resolve(strategy, cfg, "strategy", "direct")
    instruction = resolve(instruction, cfg, "instruction", DEFAULT_INSTRUCTION)
    feedback = PromptStrategy.named(strategy_kind).feedback_line

    train_all, dev_all = [], []
    n_accept = n_records = 0
    for traces_path, dataset_path in zip(traces_paths, dataset_paths):
        data = load_dataset(dataset_path)
        records = [record for record, _ in load_trace_file(traces_path)]
        n_records += len(records)
        sampled = downsample(records, ratio, seed)
        n_accept += sum(1 for r in sampled if r.label == "accept")
        examples = records_to_examples(data.by_id(), sampled, instruction, feedback)
        corpus = split(examples, fraction, seed)
        train_all.extend(corpus.train)
        dev_all.extend(corpus.dev)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_train = export_training_file(train_all, out_dir / "train.jsonl")
    n_dev = export_training_file(dev_all, out_dir / "dev.jsonl")
    summary = {"n_source_records": n_records, "n_train": n_train, "n_dev": n_dev,
               "n_accept_kept": n_accept}
    write_manifest(out_dir, "prepare", {
        "traces": list(traces_paths), "datasets": list(dataset_paths),
        "reject_per_accept": ratio, "train_fraction": fraction, "seed": seed,
        "strategy": strategy_kind, "instruction": instruction})
    click.echo(json.dumps(summary))


@cli.command("train-critic")
@config_option
@click.option("--train", "train_file", type=click.Path(exists=True), required=True)
@click.option("--dev", "dev_file", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), default=None, help="Model file path.")
@click.option("--lr", type=float, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--hash-dim", type=int, default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--w-reject", type=float, default=None)
@click.option("--w-accept", type=float, default=None)
@click.option("--seed", type=int, default=None)
def cmd_train_critic(config, train_file, dev_file, out, lr, epochs, hash_dim,
                     threshold, w_reject, w_accept, seed):
    """Train the built-in linear critic on an exported corpus."""
    cfg = load_config(config)
    hyper = TrainHyper(
        lr=resolve(lr, cfg, "lr", TrainHyper.lr, float),
        epochs=resolve(epochs, cfg, "epochs", TrainHyper.epochs, int),
        hash_dim=resolve(hash_dim, cfg, "hash_dim", TrainHyper.hash_dim, int),
        threshold=resolve(threshold, cfg, "threshold", TrainHyper.threshold, float),
        class_weights=(
            resolve(w_reject, cfg, "w_reject", TrainHyper.class_weights[0], float),
            resolve(w_accept, cfg, "w_accept", TrainHyper.class_weights[1], float),
        ),
        seed=resolve(seed, cfg, "seed", TrainHyper.seed, int),
    )
    model_path = Path(resolve(out, cfg, "out", "critic.model"))
    model, report = train_linear(train_file, dev_file, hyper)
    model_path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, model_path)
    summary = {
        "model": str(model_path),
        "epochs_run": report.epochs_run,
        "final_train_loss": report.final_train_loss,
        "dev_accuracy": report.dev_accuracy,
        "dev_false_positive_count": report.dev_false_positive_count,
        "dev_false_negative_count": report.dev_false_negative_count,
    }
    write_manifest(model_path.parent, "train-critic",
                   {"train": str(train_file), "dev": str(dev_file), **vars(hyper)})
    click.echo(json.dumps(summary))


@cli.command("infer")
@config_option
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), default=None, help="Output directory.")
@click.option("--backend", default=None, type=click.Choice(["scripted", "stochastic", "remote"]))
@click.option("--fixtures", type=click.Path(exists=True), default=None)
@click.option("--p", type=float, default=None)
@click.option("--endpoint", default=None)
@click.option("--model", default=None)
@click.option("--critic", "critic_spec", default=None,
              help="oracle | accept | reject | linear:<path> | remote:<url>")
@click.option("--strategy", default=None, type=click.Choice(["direct", "gradual"]))
@click.option("--max-turns", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--workers", type=int, default=None)
def cmd_infer(config, dataset, out, backend, fixtures, p, endpoint, model,
              critic_spec, strategy, max_turns, seed, workers):
    """Run the accept/reject loop over a dataset."""
    cfg = load_config(config)
    out_dir = Path(resolve(out, cfg, "out", "out"))
    backend = resolve(backend, cfg, "backend", "stochastic")
    critic_spec = resolve(critic_spec, cfg, "critic", "oracle")
    strategy_kind = resolve(strategy, cfg, "strategy", "direct")
    max_turns = resolve(max_turns, cfg, "max_turns_inference", DEFAULT_INFERENCE_TURNS, int)
    seed = resolve(seed, cfg, "seed", 0, int)
    workers = resolve(workers, cfg, "workers", 4, int)
    p = resolve(p, cfg, "p", 0.5, float)
    fixtures = resolve(fixtures, cfg, "fixtures", None)
    endpoint = resolve(endpoint, cfg, "endpoint", None)
    model = resolve(model, cfg, "model", None)

    data = load_dataset(dataset)
    reasoner = build_reasoner(backend, fixtures, p, seed, endpoint, model, workers)
    critic = build_critic(critic_spec, data)
    out_dir.mkdir(parents=True, exist_ok=True)
    outcomes_path = out_dir / f"{data.name}.outcomes.jsonl"
    summary = infer_dataset(data, reasoner, critic, PromptStrategy.named(strategy_kind),
                            max_turns, outcomes_path, workers)
    write_manifest(out_dir, "infer", {
        "dataset": str(dataset), "backend": backend, "critic": critic_spec,
        "strategy": strategy_kind, "max_turns": max_turns, "seed": seed, "p": p,
        "outcomes": str(outcomes_path)})
    click.echo(json.dumps(summary))


@cli.command("eval")
@config_option
@click.option("--outcomes", type=click.Path(exists=True), required=True)
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--ks", default=None, help="Comma-separated penalty factors (default 1,3).")
@click.option("--out", type=click.Path(), default=None, help="JSON report path.")
def cmd_eval(config, outcomes, dataset, ks, out):
    """Score persisted outcomes against gold answers."""
    cfg = load_config(config)
    ks_text = resolve(ks, cfg, "ks", "1,3")
    k_values = tuple(float(k) for k in ks_text.split(","))
    result = score_outcomes(load_outcome_file(outcomes), load_dataset(dataset), k_values)
    click.echo(result.format_table())
    report = json.dumps(result.to_dict(), indent=2)
    if out:
        Path(out).write_text(report + "\n", encoding="utf-8")
    else:
        click.echo(report)


@cli.command("simulate")
@config_option
@click.option("--p", type=float, default=None, help="Reasoner per-turn accuracy.")
@click.option("--n", type=int, default=None, help="Number of synthetic items.")
@click.option("--choices", "n_choices", type=int, default=None)
@click.option("--critic", "critic_spec", default=None)
@click.option("--turns", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--workers", type=int, default=None)
def cmd_simulate(config, p, n, n_choices, critic_spec, turns, seed, workers):
    """Run the loop on a synthetic dataset with the stochastic reasoner."""
    cfg = load_config(config)
    p = resolve(p, cfg, "p", 0.5, float)
    n = resolve(n, cfg, "n", 1000, int)
    n_choices = resolve(n_choices, cfg, "choices", 4, int)
    critic_spec = resolve(critic_spec, cfg, "critic", "oracle")
    turns = resolve(turns, cfg, "turns", DEFAULT_INFERENCE_TURNS, int)
    seed = resolve(seed, cfg, "seed", 0, int)
    workers = resolve(workers, cfg, "workers", 1, int)

    data = synthetic_dataset(n, n_choices)
    reasoner = StochasticSimReasoner(p_correct=p, seed=seed)
    critic = build_critic(critic_spec, data)
    outcomes: list[InferenceOutcome] = []
    summary = infer_dataset(data, reasoner, critic, PromptStrategy.direct(),
                            turns, None, workers, collect=outcomes)
    result = score_outcomes(outcomes, data)
    click.echo(result.format_table())
    click.echo(json.dumps({**summary, **result.to_dict()}))


def synthetic_dataset(n: int, n_choices: int = 4, name: str = "synthetic") -> Dataset:
    from .qa_data import QaItem

    items = [
        QaItem(
            id=f"s{i:06d}",
            question=f"Synthetic question {i}?",
            choices=tuple(f"option {j}" for j in range(n_choices)),
            gold_index=i % n_choices,
        )
        for i in range(n)
    ]
    return Dataset(name=name, items=items)


def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit codes: 0 ok, 1 usage, 2 runtime."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except (DrrError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
