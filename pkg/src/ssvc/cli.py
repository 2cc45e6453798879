"""Command line entry point.

Subcommands: gen-data, train, train-classifier, synth, eval, gradcheck,
sweep.  Configuration comes from an optional JSON file (``--config``)
with sections "model", "train", "corpus", plus dotted-path overrides
(``--set train.max_steps=200``).  Values after ``=`` are parsed as JSON
where possible, else kept as strings.

Exit codes: 0 success, 1 usage or validation error, 2 runtime failure.

Set SSVC_NUM_THREADS to cap BLAS/OpenMP threads; it is applied before
numpy loads, which is why the heavyweight imports here are deferred.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

log = logging.getLogger("ssvc.cli")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse exits with 2 by default; the contract reserves 2 for
        # runtime failures, so route usage problems through UsageError
        raise UsageError(message)


# -- config plumbing --------------------------------------------------


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _apply_set(cfg: dict, item: str) -> None:
    if "=" not in item:
        raise UsageError(f"--set needs key=value, got {item!r}")
    path, raw = item.split("=", 1)
    keys = path.strip().split(".")
    if not all(keys):
        raise UsageError(f"--set path {path!r} is malformed")
    node = cfg
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise UsageError(f"--set path {path!r} crosses a non-section value")
    node[keys[-1]] = _parse_value(raw)


def load_config(path, sets) -> dict:
    cfg: dict = {}
    if path is not None:
        with open(path) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ValueError(f"config file {path} must hold a JSON object")
    for item in sets or []:
        _apply_set(cfg, item)
    return cfg


def _listy(value):
    return tuple(value) if isinstance(value, list) else value


def model_config_from(section: dict):
    """Build a ModelConfig from {"scale", "latent", field overrides}."""
    import dataclasses

    from ssvc.model import LatentSpec, desk_scale, full_scale, micro_scale

    d = dict(section or {})
    scale = d.pop("scale", "desk")
    presets = {"full": full_scale, "desk": desk_scale, "micro": micro_scale}
    if scale not in presets:
        raise ValueError(f"model.scale must be one of {sorted(presets)}, got {scale!r}")
    latent = d.pop("latent", {"kind": "discrete", "size": 6})
    spec = LatentSpec(latent.get("kind", "discrete"), int(latent.get("size", 6)))
    cfg = presets[scale](spec)
    if d:
        known = {f.name for f in dataclasses.fields(cfg)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown model config fields: {sorted(unknown)}")
        cfg = dataclasses.replace(cfg, **{k: _listy(v) for k, v in d.items()})
    return cfg


def train_config_from(section: dict):
    from ssvc.train import TrainConfig

    try:
        return TrainConfig(**(section or {}))
    except TypeError as exc:
        raise ValueError(f"bad train config: {exc}") from None


def corpus_config_from(section: dict):
    from ssvc.corpus import GenerationConfig

    try:
        return GenerationConfig(**{k: _listy(v) for k, v in (section or {}).items()})
    except TypeError as exc:
        raise ValueError(f"bad corpus config: {exc}") from None


# -- subcommands ------------------------------------------------------


def cmd_gen_data(args) -> int:
    from ssvc.autodiff import Rng
    from ssvc.corpus import generate_corpus, save_corpus

    cfg = corpus_config_from(load_config(args.config, args.set).get("corpus"))
    corpus = generate_corpus(cfg, Rng(args.seed))
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus.utterances)} utterances "
          f"({len(corpus.train_idx)} train, {len(corpus.val_idx)} val, "
          f"{len(corpus.test_idx)} test, {corpus.meta['n_supervised']} supervised) "
          f"to {args.out}")
    return 0


def cmd_train(args) -> int:
    from ssvc.corpus import load_corpus
    from ssvc.train import train

    conf = load_config(args.config, args.set)
    corpus = load_corpus(args.corpus)
    result = train(corpus, model_config_from(conf.get("model")),
                   train_config_from(conf.get("train")), args.out,
                   resume=args.resume)
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"metrics: {result.metrics_path}")
    print(f"supervised utterances per epoch: {result.supervised_count}")
    return 0


def cmd_train_classifier(args) -> int:
    from ssvc.corpus import load_corpus
    from ssvc.train import train_classifier

    conf = load_config(args.config, args.set)
    corpus = load_corpus(args.corpus)
    result = train_classifier(corpus, model_config_from(conf.get("model")),
                              train_config_from(conf.get("train")), args.out)
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"held-out accuracy: {result.val_accuracy:.4f}")
    return 0


def cmd_synth(args) -> int:
    from ssvc.autodiff.ndar import write_ndar
    from ssvc.train import synthesize

    if (args.cls is None) == (args.value is None):
        raise UsageError("pass exactly one of --class or --value")
    if args.cls is not None:
        control = args.cls
    else:
        control = [float(v) for v in args.value.split(",")]
    tokens = [int(t) for t in args.tokens.split(",")]
    mel = synthesize(args.ckpt, tokens, control, z_u_mode=args.zu,
                     seed=args.seed, speaker=args.speaker,
                     max_frames=args.max_frames)
    with open(args.out, "wb") as fh:
        write_ndar(fh, mel.frames)
    print(f"wrote {mel.frames.shape[0]}x{mel.frames.shape[1]} mel to {args.out}")
    return 0


def cmd_eval(args) -> int:
    from ssvc.corpus import load_corpus
    from ssvc.train import evaluate

    corpus = load_corpus(args.corpus)
    report = evaluate(args.ckpt, corpus, args.classifier,
                      n_utterances=args.n, seed=args.seed)
    payload = report.to_json_dict()
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
        print(f"report written to {args.out}")
    for key in ("classifier_accuracy", "rate_error", "f0_error", "mcd_dtw"):
        if payload.get(key) is not None:
            print(f"{key}: {payload[key]:.6f}")
    return 0


def cmd_gradcheck(args) -> int:
    from ssvc.train import GRADCHECK_TOL, micro_gradcheck

    if args.precision != "f64":
        raise ValueError(
            "finite differences are noise-dominated below float64; "
            "run with --precision f64")
    kinds = ("discrete", "continuous") if args.latent == "both" else (args.latent,)
    worst = 0.0
    for kind in kinds:
        report = micro_gradcheck(kind, seed=args.seed)
        print(f"{kind}: max relative error {report.max_rel_err:.3e} "
              f"over {len(report.entries)} directions")
        worst = max(worst, report.max_rel_err)
    print(f"worst relative error: {worst:.3e} (tolerance {GRADCHECK_TOL:.0e})")
    return 0 if worst < GRADCHECK_TOL else 2


def cmd_sweep(args) -> int:
    from ssvc.train import run_sweep

    conf = load_config(args.config, args.set)
    fractions = (tuple(float(f) for f in args.fractions.split(","))
                 if args.fractions else None)
    kwargs = {} if fractions is None else {"fractions": fractions}
    csv_path = run_sweep(corpus_config_from(conf.get("corpus")),
                         model_config_from(conf.get("model")),
                         train_config_from(conf.get("train")),
                         args.out, corpus_seed=args.seed,
                         eval_utterances=args.n, **kwargs)
    print(f"sweep results: {csv_path}")
    return 0


# -- wiring -----------------------------------------------------------


def build_parser() -> _Parser:
    p = _Parser(prog="ssvc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="command")

    def common(sp):
        sp.add_argument("--config", default=None, help="JSON config file")
        sp.add_argument("--set", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config entry")
        sp.add_argument("--seed", type=int, default=0)

    g = sub.add_parser("gen-data", help="generate a synthetic corpus")
    common(g)
    g.add_argument("--out", required=True, help="output corpus path (.sscp)")
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train a synthesis model")
    common(t)
    t.add_argument("--corpus", required=True)
    t.add_argument("--out", required=True, help="run directory")
    t.add_argument("--resume", default=None, help="checkpoint to continue from")
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("train-classifier", help="train the evaluation classifier")
    common(c)
    c.add_argument("--corpus", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_train_classifier)

    s = sub.add_parser("synth", help="synthesize one utterance")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--tokens", required=True, help="comma-separated token ids")
    s.add_argument("--class", dest="cls", type=int, default=None,
                   help="discrete control class")
    s.add_argument("--value", default=None, help="continuous control value(s)")
    s.add_argument("--zu", choices=("mean", "sample"), default="mean")
    s.add_argument("--speaker", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-frames", type=int, default=400)
    s.add_argument("--out", required=True, help="output mel path (.ndar)")
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("eval", help="score a checkpoint on the test split")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--corpus", required=True)
    e.add_argument("--classifier", default=None)
    e.add_argument("--n", type=int, default=100, help="test utterances to use")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", default=None, help="write the full report JSON here")
    e.set_defaults(func=cmd_eval)

    gc = sub.add_parser("gradcheck", help="finite-difference check of the objective")
    gc.add_argument("--precision", choices=("f32", "f64"), default="f64")
    gc.add_argument("--latent", choices=("discrete", "continuous", "both"),
                    default="both")
    gc.add_argument("--seed", type=int, default=0)
    gc.set_defaults(func=cmd_gradcheck)

    sw = sub.add_parser("sweep", help="train/evaluate across supervision fractions")
    common(sw)
    sw.add_argument("--out", required=True)
    sw.add_argument("--fractions", default=None,
                    help="comma-separated fractions (default 0.005..1.0 grid)")
    sw.add_argument("--n", type=int, default=100, help="test utterances per eval")
    sw.set_defaults(func=cmd_sweep)
    return p


def _apply_thread_env() -> None:
    threads = os.environ.get("SSVC_NUM_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)


def main(argv=None) -> int:
    _apply_thread_env()
    logging.basicConfig(level=os.environ.get("SSVC_LOG", "INFO"),
                        format="%(asctime)s %(name)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "command", None) is None:
            parser.print_usage(sys.stderr)
            return 1
        return args.func(args)
    except SystemExit as exc:           # argparse --help
        code = exc.code
        return code if isinstance(code, int) else 0
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ssvc: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError, IsADirectoryError, KeyError) as exc:
        print(f"ssvc: error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"ssvc: runtime failure: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:            # pragma: no cover - last resort
        print(f"ssvc: unexpected failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
