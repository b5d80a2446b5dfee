"""Command-line interface: serve, enroll, identify, calibrate, evaluate, export-archive.

Commands print JSON to stdout and exit 0 on success, 2 on validation
problems (bad flags, malformed inputs), 1 on runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import backends
from .errors import DatasetError, PresenziaError, ValidationError
from .evaluation import (
    DatasetManifest,
    ablation_by_subset_size,
    emit_report,
    evaluate_verification,
    load_pairs,
)
from .metric import LabeledPair, calibrate_from_distances, calibrate_threshold
from .service.config import load_config


def _load_rgb(path: str) -> np.ndarray:
    import cv2

    raw = cv2.imread(path, cv2.IMREAD_COLOR)
    if raw is None:
        raise ValidationError(f"cannot read image {path}")
    return cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="presenzia")
    parser.add_argument("--config", help="path to TOML/JSON config file")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("serve", help="run the HTTP service")

    enroll = sub.add_parser("enroll", help="add an employee with enrollment images")
    enroll.add_argument("--id", required=True, dest="employee_id")
    enroll.add_argument("--name", required=True)
    enroll.add_argument("--contact", default=None, help="email; defaults to <id>@example.com")
    enroll.add_argument("--images", nargs="+", required=True)

    identify = sub.add_parser("identify", help="identify the face in an image")
    identify.add_argument("--image", required=True)
    identify.add_argument("--k", type=int, default=None)
    identify.add_argument("--tau", type=float, default=None)

    calibrate = sub.add_parser("calibrate", help="calibrate the verification threshold")
    calibrate.add_argument(
        "--pairs-file",
        required=True,
        help="JSON lines: {'same': bool} plus either 'distance' or 'a'/'b' vectors",
    )

    evaluate = sub.add_parser("evaluate", help="run the pair-verification benchmark")
    evaluate.add_argument("--lfw-root", required=True)
    evaluate.add_argument("--pairs-file", required=True)
    evaluate.add_argument("--backend", choices=("reference", "real"), default="reference")
    evaluate.add_argument("--subset-size", type=int, default=None)
    evaluate.add_argument("--ablation-sizes", default=None, help="comma-separated sizes")
    evaluate.add_argument("--repeats", type=int, default=1)
    evaluate.add_argument("--seed", type=int, default=0)
    evaluate.add_argument("--out", default=None)
    evaluate.add_argument("--format", choices=("json", "csv", "markdown"), default="json")

    export = sub.add_parser("export-archive", help="dump archive records as JSON lines")
    export.add_argument("--out", default=None)
    return parser


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import build_app, write_openapi

    config = load_config(args.config)
    app = build_app(config)
    write_openapi(app, Path("docs") / "openapi.json")
    uvicorn.run(app, host=config.host, port=config.port)
    return 0


def _service_state(args: argparse.Namespace):
    from .service.app import ServiceState

    return ServiceState(load_config(args.config))


def _cmd_enroll(args: argparse.Namespace) -> int:
    from .directory import EmployeeRecord

    state = _service_state(args)
    images = [_load_rgb(p) for p in args.images]
    contact = args.contact or f"{args.employee_id}@example.com"
    record = EmployeeRecord(employee_id=args.employee_id, name=args.name, contact=contact)
    created = state.directory.add_employee(record, images)
    token = state.issue_employee_token(created.employee_id)
    print(json.dumps({"employee": created.to_dict(), "token": token}))
    return 0


def _cmd_identify(args: argparse.Namespace) -> int:
    from dataclasses import replace

    from .detection import crop_and_resize
    from .gallery import identify

    state = _service_state(args)
    config = state.config.recognition
    if args.k is not None:
        config = replace(config, k=args.k)
    if args.tau is not None:
        config = replace(config, threshold=args.tau)
    image = _load_rgb(args.image)
    detections = state.detector.detect(image)
    if not detections:
        print(json.dumps({"decision": None, "error": "no face detected"}))
        return 0
    chip = crop_and_resize(image, detections[0].box)
    result = identify(state.embedder.embed(chip), state.gallery, config)
    print(json.dumps(result.to_dict()))
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    from .embedding import l2_normalize

    distances: list[float] = []
    labels: list[bool] = []
    pairs: list[LabeledPair] = []
    with open(args.pairs_file, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                if "distance" in data:
                    distances.append(float(data["distance"]))
                    labels.append(bool(data["same"]))
                else:
                    pairs.append(
                        LabeledPair(
                            l2_normalize(data["a"]), l2_normalize(data["b"]), bool(data["same"])
                        )
                    )
            except (KeyError, ValueError, TypeError) as exc:
                raise ValidationError(f"pairs file line {lineno}: {exc}") from exc
    if pairs and distances:
        raise ValidationError("pairs file mixes 'distance' and 'a'/'b' lines")
    result = calibrate_threshold(pairs) if pairs else calibrate_from_distances(distances, labels)
    print(json.dumps(result.to_dict()))
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    import random

    detector = backends.get_detector(args.backend)
    embedder = backends.get_embedder(args.backend)
    manifest = DatasetManifest.scan(args.lfw_root)
    pairs = load_pairs(manifest, args.pairs_file)

    if args.ablation_sizes:
        sizes = [int(s) for s in args.ablation_sizes.split(",")]
        report = ablation_by_subset_size(
            pairs, sizes, args.repeats, detector, embedder, seed=args.seed
        )
    else:
        if args.subset_size is not None and args.subset_size < len(pairs):
            pairs = random.Random(args.seed).sample(pairs, args.subset_size)
        report = evaluate_verification(pairs, detector, embedder, split_seed=args.seed)

    if args.out:
        emit_report(report, args.format, args.out)
    print(json.dumps(report.to_dict()))
    return 0


def _cmd_export_archive(args: argparse.Namespace) -> int:
    state = _service_state(args)
    lines = [json.dumps(r.to_dict()) for r in state.archive.records()]
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


_COMMANDS = {
    "serve": _cmd_serve,
    "enroll": _cmd_enroll,
    "identify": _cmd_identify,
    "calibrate": _cmd_calibrate,
    "evaluate": _cmd_evaluate,
    "export-archive": _cmd_export_archive,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValidationError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PresenziaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
