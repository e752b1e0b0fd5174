"""Command-line interface.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.
Every run writes a ``<output>.manifest.json`` with the config snapshot,
seed, and content hashes of its inputs, enough to re-run it.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from .autograd import NumericError
from .checkpoint import IntegrityError, load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig, config_to_dict, load_config, _build
from .data import (
    GeneratorConfig,
    default_vocab,
    generate,
    read_jsonl,
    write_jsonl,
)
from .data.documents import SchemaError
from .data.featurize import class_list
from .data.generator import GenerationError
from .encoder import EncoderConfig
from .experiments import ORDER_VARIANTS, order_variant_docs, run_order_study
from .gradcheck import run_trials
from .heads import HeadConfig
from .training import ENCODER_PREFIXES, evaluate_task, finetune, pretrain
from .autograd import Params
from .encoder import init_encoder_params
from .heads import init_head_params, init_mlm_params

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_path, args, cfg_dict, inputs):
    manifest = {
        "argv": sys.argv[1:],
        "config": cfg_dict,
        "seed": cfg_dict.get("seed"),
        "inputs": {os.fspath(p): _sha256(p) for p in inputs if p and os.path.exists(p)},
    }
    with open(f"{out_path}.manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, sort_keys=True, indent=2)
        f.write("\n")


def _load_docs(data_dir, name):
    path = os.path.join(data_dir, f"{name}.jsonl")
    if not os.path.exists(path):
        raise SchemaError(f"missing dataset file {path}")
    return read_jsonl(path), path


def cmd_gen_data(args):
    if args.config:
        with open(args.config, encoding="utf-8") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{args.config}: not valid JSON: {exc}") from exc
        gen_cfg = _build(GeneratorConfig, data, "")
    else:
        gen_cfg = GeneratorConfig()
    gen_cfg.seed = args.seed
    train = generate(gen_cfg, args.n_train)
    test_cfg = GeneratorConfig(**{**gen_cfg.__dict__, "seed": args.seed + 1})
    test = generate(test_cfg, args.n_test)
    os.makedirs(args.out, exist_ok=True)
    write_jsonl(train, os.path.join(args.out, "train.jsonl"))
    write_jsonl(test, os.path.join(args.out, "test.jsonl"))
    cfg_dict = dict(gen_cfg.__dict__)
    cfg_dict["page_w_range"] = list(cfg_dict["page_w_range"])
    cfg_dict["page_h_range"] = list(cfg_dict["page_h_range"])
    cfg_dict["rows_range"] = list(cfg_dict["rows_range"])
    _write_manifest(os.path.join(args.out, "dataset"), args, cfg_dict, [args.config])
    print(f"wrote {len(train)} train / {len(test)} test documents to {args.out}")
    return EXIT_OK


def cmd_pretrain(args):
    cfg = load_config(args.config, {"task": "pretrain", "optimizer.steps": args.steps})
    docs, train_path = _load_docs(args.data, "train")
    vocab = default_vocab()

    def on_log(step, loss):
        print(f"step {step}: loss {loss:.4f}")

    params, log = pretrain(docs, vocab, cfg, on_log=on_log)
    save_checkpoint(
        args.out,
        params.state(),
        {"run": config_to_dict(cfg), "kind": "pretrain"},
        rng_state=None,
    )
    _write_manifest(args.out, args, config_to_dict(cfg), [args.config, train_path])
    print(f"saved pretrain checkpoint to {args.out}")
    return EXIT_OK


def cmd_finetune(args):
    overrides = {
        "task": args.task,
        "train_count": args.train_count,
        "train_fraction": args.train_fraction,
    }
    cfg = load_config(args.config, overrides)
    docs, train_path = _load_docs(args.data, "train")
    vocab = default_vocab()
    state = None
    if args.ckpt:
        state, _, _ = load_checkpoint(args.ckpt)
    params, log, classes = finetune(docs, vocab, cfg, args.task, pretrained_state=state)
    save_checkpoint(
        args.out,
        params.state(),
        {"run": config_to_dict(cfg), "kind": "finetune", "task": args.task, "classes": classes},
        rng_state=None,
    )
    _write_manifest(args.out, args, config_to_dict(cfg), [args.config, args.ckpt, train_path])
    print(f"saved fine-tuned checkpoint to {args.out}")
    return EXIT_OK


def _restore_finetuned(ckpt_path):
    state, meta, _ = load_checkpoint(ckpt_path)
    if meta.get("kind") != "finetune":
        raise ConfigError(f"{ckpt_path} is not a fine-tuned checkpoint")
    cfg = _build(RunConfig, meta["run"], "")
    classes = meta["classes"]
    cfg.heads.num_classes = len(classes)
    params = Params()
    rng = np.random.default_rng(0)
    init_encoder_params(cfg.encoder, rng, params)
    init_head_params(cfg.heads, rng, params)
    params.load_state(state)
    return params, cfg, classes, meta["task"]


def _emit_report(report_dict, path):
    if path:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(report_dict, f, sort_keys=True, indent=2)
            f.write("\n")
        print(f"report written to {path}")


def cmd_eval(args):
    params, cfg, classes, ckpt_task = _restore_finetuned(args.ckpt)
    task = args.task or ckpt_task
    docs, test_path = _load_docs(args.data, "test")
    if args.variant != "identity":
        docs = order_variant_docs(docs, args.variant, seed=cfg.seed, angle=args.angle)
    vocab = default_vocab()
    report = evaluate_task(params, cfg, task, docs, vocab, classes)
    report.variant = args.variant
    print(report.table())
    _emit_report(report.to_dict(), args.report)
    if args.report:
        _write_manifest(args.report, args, config_to_dict(cfg), [args.ckpt, test_path])
    return EXIT_OK


def cmd_order_study(args):
    params, cfg, classes, task = _restore_finetuned(args.ckpt)
    docs, test_path = _load_docs(args.data, "test")
    vocab = default_vocab()
    reports = run_order_study(params, cfg, task, docs, vocab, classes, seed=cfg.seed)
    print(f"{'variant':<10} {'P':>7} {'R':>7} {'F1':>7}")
    for variant, r in reports.items():
        print(f"{variant:<10} {r.precision:7.4f} {r.recall:7.4f} {r.f1:7.4f}")
    _emit_report({v: r.to_dict() for v, r in reports.items()}, args.report)
    if args.report:
        _write_manifest(args.report, args, config_to_dict(cfg), [args.ckpt, test_path])
    return EXIT_OK


def cmd_grad_check(args):
    worst = run_trials(args.trials)
    print(f"worst max relative error over {args.trials} trials: {worst:.3e}")
    if worst > 1e-4:
        print("gradient check FAILED (tolerance 1e-4)", file=sys.stderr)
        return EXIT_NUMERIC
    print("gradient check passed (tolerance 1e-4)")
    return EXIT_OK


def build_parser() -> _Parser:
    p = _Parser(prog="layoutkie", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate a synthetic dataset")
    g.add_argument("--config", default=None)
    g.add_argument("--out", required=True)
    g.add_argument("--n-train", type=int, required=True)
    g.add_argument("--n-test", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("pretrain", help="masked-LM pretraining")
    t.add_argument("--config", default=None)
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--steps", type=int, default=None)
    t.set_defaults(func=cmd_pretrain)

    f = sub.add_parser("finetune", help="fine-tune on a task")
    f.add_argument("--config", default=None)
    f.add_argument("--ckpt", default=None)
    f.add_argument("--task", required=True, choices=["ee_bio", "ee_spade", "el_spade"])
    f.add_argument("--data", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--train-count", type=int, default=None)
    f.add_argument("--train-fraction", type=float, default=None)
    f.set_defaults(func=cmd_finetune)

    e = sub.add_parser("eval", help="evaluate a fine-tuned checkpoint")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--task", default=None)
    e.add_argument("--data", required=True)
    e.add_argument("--variant", default="identity", choices=list(ORDER_VARIANTS))
    e.add_argument("--angle", type=float, default=10.0)
    e.add_argument("--report", default=None)
    e.set_defaults(func=cmd_eval)

    o = sub.add_parser("order-study", help="evaluate across serialization variants")
    o.add_argument("--ckpt", required=True)
    o.add_argument("--data", required=True)
    o.add_argument("--report", required=True)
    o.set_defaults(func=cmd_order_study)

    c = sub.add_parser("grad-check", help="randomized full-model gradient checks")
    c.add_argument("--trials", type=int, default=20)
    c.set_defaults(func=cmd_grad_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemaError, GenerationError, IntegrityError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
