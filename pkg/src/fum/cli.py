"""Command-line entry point: ``fum <subcommand> [--config FILE] [--set key=value ...]``.

Config files hold ``key = value`` lines.  Keys are the fields of
:class:`~fum.config.TrainConfig`, of :class:`~fum.synthetic.SyntheticSpec`
(``seed`` is shared) and of :class:`Paths`.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from fum.bench import bench_mixers, measure_scaling
from fum.cache import EmbeddingCache, rank_from_cache
from fum.checkpoint import load_checkpoint, save_checkpoint
from fum.config import TrainConfig, apply_assignments, parse_assignments, read_config_file
from fum.data import DatasetBundle, load_mind_dir, load_pretrained_vectors
from fum.metrics import REPORT_HEADER, evaluate
from fum.model import FUM
from fum.synthetic import SyntheticSpec, generate_synthetic
from fum.training import run_training

log = logging.getLogger("fum")

COMMANDS = ("train", "eval", "encode-news", "encode-users", "rank", "bench", "synth")


@dataclass(frozen=True)
class Paths:
    data_dir: str = "data"
    out_dir: str = "runs"
    checkpoint: str = ""
    vectors: str = ""
    split: str = "valid"
    news_cache: str = ""
    user_cache: str = ""
    bench_lengths: tuple = (1024, 2048, 4096)
    bench_trials: int = 5
    bench_d_in: int = 64
    bench_heads: int = 2
    bench_d_h: int = 32

    def out(self, name: str) -> Path:
        return Path(self.out_dir) / name

    @property
    def checkpoint_path(self) -> Path:
        return Path(self.checkpoint) if self.checkpoint else self.out("model.ckpt")

    @property
    def news_cache_path(self) -> Path:
        return Path(self.news_cache) if self.news_cache else self.out("news.cache")

    @property
    def user_cache_path(self) -> Path:
        return Path(self.user_cache) if self.user_cache else self.out(f"users-{self.split}.cache")


@dataclass
class Settings:
    train: TrainConfig
    synth: SyntheticSpec
    paths: Paths


def load_settings(config_path: str | None, overrides: list[str]) -> Settings:
    assignments = read_config_file(config_path) if config_path else {}
    assignments.update(parse_assignments(overrides, "--set"))
    groups = {"train": TrainConfig(), "synth": SyntheticSpec(), "paths": Paths()}
    routed: dict[str, dict[str, str]] = {g: {} for g in groups}
    for key, value in assignments.items():
        owners = [g for g, obj in groups.items() if key in {f.name for f in fields(obj)}]
        if not owners:
            raise ValueError(f"unknown config key {key!r}")
        for g in owners:
            routed[g][key] = value
    return Settings(**{g: apply_assignments(obj, routed[g]) for g, obj in groups.items()})


def _bundle(s: Settings) -> DatasetBundle:
    return load_mind_dir(s.paths.data_dir, s.train.k, s.train.l, s.train.min_count)


def _model(s: Settings, bundle: DatasetBundle) -> FUM:
    store, _ = load_checkpoint(s.paths.checkpoint_path)
    return FUM(s.train, len(bundle.vocab), store=store)


def _split(s: Settings, bundle: DatasetBundle):
    if s.paths.split not in ("train", "valid"):
        raise ValueError(f"split must be 'train' or 'valid', got {s.paths.split!r}")
    return getattr(bundle, s.paths.split)


def cmd_synth(s: Settings) -> None:
    corpus = generate_synthetic(s.synth)
    corpus.write(s.paths.data_dir)
    print(f"wrote {len(corpus.news)} news, {len(corpus.train)} train and {len(corpus.valid)} valid impressions to {s.paths.data_dir}")


def cmd_train(s: Settings) -> None:
    bundle = _bundle(s)
    vectors = None
    if s.paths.vectors:
        vectors, hit = load_pretrained_vectors(s.paths.vectors, bundle.vocab, s.train.d, s.train.seed)
        log.info("pretrained vectors cover %.1f%% of the vocabulary", 100 * hit)
    model = FUM(s.train, len(bundle.vocab), word_vectors=vectors)
    result = run_training(bundle, s.train, model)
    Path(s.paths.out_dir).mkdir(parents=True, exist_ok=True)
    save_checkpoint(model.store, s.paths.checkpoint_path, result.adam)
    s.paths.out("metrics.tsv").write_text(result.log_tsv(), encoding="utf-8")
    sys.stdout.write(result.log_tsv())


def cmd_eval(s: Settings) -> None:
    bundle = _bundle(s)
    report = evaluate(_model(s, bundle), bundle.news, _split(s, bundle))
    sys.stdout.write(f"split\t{REPORT_HEADER}\n{s.paths.split}\t{report.tsv()}\n")


def cmd_encode_news(s: Settings) -> None:
    bundle = _bundle(s)
    vectors = _model(s, bundle).encode_all_news(bundle.news)
    Path(s.paths.news_cache_path).parent.mkdir(parents=True, exist_ok=True)
    EmbeddingCache(bundle.news.ids, vectors[1:]).save(s.paths.news_cache_path)
    print(f"cached {len(bundle.news)} news vectors in {s.paths.news_cache_path}")


def cmd_encode_users(s: Settings) -> None:
    bundle = _bundle(s)
    model = _model(s, bundle)
    impressions = _split(s, bundle)
    users = model.encode_impression_users(bundle.news, impressions, model.encode_all_news(bundle.news))
    Path(s.paths.user_cache_path).parent.mkdir(parents=True, exist_ok=True)
    EmbeddingCache([imp.impression_id for imp in impressions], users).save(s.paths.user_cache_path)
    print(f"cached {len(impressions)} user vectors in {s.paths.user_cache_path}")


def cmd_rank(s: Settings) -> None:
    bundle = _bundle(s)
    news_cache = EmbeddingCache.load(s.paths.news_cache_path)
    user_cache = EmbeddingCache.load(s.paths.user_cache_path)
    for ranked in rank_from_cache(news_cache, user_cache, _split(s, bundle)):
        sys.stdout.write(ranked.tsv() + "\n")


def cmd_bench(s: Settings) -> None:
    p = s.paths
    mixers = bench_mixers(p.bench_d_in, p.bench_heads, p.bench_d_h, seed=s.train.seed)
    report = measure_scaling(mixers, list(p.bench_lengths), trials=p.bench_trials, seed=s.train.seed)
    sys.stdout.write(report.tsv())


HANDLERS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "encode-news": cmd_encode_news,
    "encode-users": cmd_encode_users,
    "rank": cmd_rank,
    "bench": cmd_bench,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fum", description="Fine-grained user modeling for news recommendation.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="file of 'key = value' lines")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        settings = load_settings(args.config, args.overrides)
        HANDLERS[args.command](settings)
    except (OSError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"fum {args.command}: {msg}", file=sys.stderr)
        return 1
    return 0


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
