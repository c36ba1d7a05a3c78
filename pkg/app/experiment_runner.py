"""Command line utility to generate matrices, certify them and run recovery experiments."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from .config import settings
from .errors import InvalidInputError, SparseRecoveryError
from .schemas import ExperimentSpec
from .services import experiments
from .services.gomp import TiePolicy, gomp_recover
from .services.oracle import lemma2_sweep
from .services.ric import certify, monotonicity_check, ric_profile
from .services.sensing import gen_counterexample, gen_gaussian, load_csv, load_vector_csv, save_csv

LOGGER = logging.getLogger(__name__)


def _index_list(value: str) -> list[int]:
    try:
        return [int(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"lista de enteros inválida: {value!r}") from None


def _add_common(parser: argparse.ArgumentParser, *names: str) -> None:
    if "K" in names:
        parser.add_argument("--K", type=int, required=True, help="Nivel de dispersión K")
    if "N" in names:
        parser.add_argument("--N", type=int, default=1, help="Índices seleccionados por iteración")
    if "m" in names:
        parser.add_argument("--m", type=int, help="Número de mediciones")
    if "n" in names:
        parser.add_argument("--n", type=int, help="Número de columnas")
    if "seed" in names:
        parser.add_argument("--seed", type=int, default=settings.experiments.master_seed)
    if "out" in names:
        parser.add_argument("--out", type=Path, help="Archivo de salida")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gomp-sharp", description="Recuperación dispersa con gOMP y verificación de la cota RIC"
    )
    parser.add_argument("--verbose", action="store_true", help="Registrar diagnósticos por iteración")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="Generar una matriz de sensado en CSV")
    gen.add_argument("kind", choices=["gaussian", "counterexample"])
    _add_common(gen, "m", "n", "seed")
    gen.add_argument("--K", type=int, help="K del contraejemplo")
    gen.add_argument("--N", type=int, default=1, help="N del contraejemplo")
    gen.add_argument("--out", type=Path, required=True, help="Archivo CSV de salida")

    ric = commands.add_parser("ric", help="Calcular delta exacto y el certificado de la cota")
    ric.add_argument("--matrix", type=Path, required=True)
    _add_common(ric, "K", "N", "out")
    ric.add_argument("--orders", type=_index_list, help="Órdenes para verificar la monotonía, p. ej. 1,2,3")

    recover = commands.add_parser("recover", help="Recuperar una señal a partir de archivos")
    recover.add_argument("--matrix", type=Path, required=True)
    recover.add_argument("--measurements", type=Path, required=True)
    _add_common(recover, "K", "N", "out")
    recover.add_argument("--epsilon", type=float, default=0.0)
    recover.add_argument("--policy", choices=["lex", "adversarial"], default="lex")
    recover.add_argument("--avoid", type=_index_list, default=[], help="Índices a evitar en empates")

    demo = commands.add_parser("demo", help="Demostración del contraejemplo de la cota")
    _add_common(demo, "K", "N", "out")

    experiment = commands.add_parser("experiment", help="Ejecutar un experimento descrito en JSON")
    experiment.add_argument("spec", type=Path, help="Archivo JSON con la especificación")
    experiment.add_argument("--out", type=Path, help="Sobrescribe output_path de la especificación")
    experiment.add_argument("--workers", type=int, default=None)

    lemma = commands.add_parser("lemma2", help="Barrido aleatorio de la identidad de formas cuadráticas")
    lemma.add_argument("--count", type=int, default=1000)
    _add_common(lemma, "seed")
    return parser


def _emit(document: str, out: Optional[Path]) -> None:
    if out is None:
        print(document)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(document if document.endswith("\n") else document + "\n")
    LOGGER.info("Resultado escrito en %s", out)


def _cmd_gen(args: argparse.Namespace) -> None:
    if args.kind == "gaussian":
        if args.m is None or args.n is None:
            raise InvalidInputError("gen gaussian requiere --m y --n")
        sensing = gen_gaussian(args.m, args.n, args.seed)
    else:
        if args.K is None:
            raise InvalidInputError("gen counterexample requiere --K")
        sensing = gen_counterexample(args.K, args.N)
    save_csv(sensing, args.out)


def _cmd_ric(args: argparse.Namespace) -> None:
    sensing = load_csv(args.matrix)
    certificate = certify(sensing, args.K, args.N)
    print(certificate.summary())
    document = certificate.model_dump()
    if args.orders:
        document["profile"] = dict(zip(args.orders, ric_profile(sensing, args.orders)))
        document["monotone"] = monotonicity_check(sensing, args.orders)
    if args.out is not None:
        _emit(json.dumps(document, indent=2), args.out)


def _cmd_recover(args: argparse.Namespace) -> None:
    sensing = load_csv(args.matrix)
    y = load_vector_csv(args.measurements)
    policy = TiePolicy.from_name(args.policy, avoid=args.avoid)
    result = gomp_recover(sensing, y, args.K, args.N, args.epsilon, policy)
    _emit(json.dumps(result.to_dict(), indent=2), args.out)


def _cmd_demo(args: argparse.Namespace) -> None:
    report = experiments.run_counterexample_demo(args.K, args.N)
    print(report.summary())
    if args.out is not None:
        experiments.write_report(report, args.out)


def _cmd_experiment(args: argparse.Namespace) -> None:
    spec = ExperimentSpec.model_validate_json(args.spec.read_text())
    report = experiments.run_experiment(spec, workers=args.workers)
    _, summary = experiments.render_report(report)
    out = args.out or spec.output_path
    if out is None:
        settings.ensure_directories()
        suffix = "csv" if isinstance(report, str) else "json"
        out = settings.experiments.output_dir / f"{spec.kind}.{suffix}"
    experiments.write_report(report, out)
    print(summary if not isinstance(report, str) else f"CSV escrito en {out}")


def _cmd_lemma2(args: argparse.Namespace) -> None:
    count, worst = lemma2_sweep(args.count, args.seed)
    print(f"instancias={count} brecha_relativa_maxima={worst:.3e}")


_COMMANDS = {
    "gen": _cmd_gen,
    "ric": _cmd_ric,
    "recover": _cmd_recover,
    "demo": _cmd_demo,
    "experiment": _cmd_experiment,
    "lemma2": _cmd_lemma2,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entrypoint compatible con console_scripts."""

    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO)
    try:
        _COMMANDS[args.command](args)
    except ValidationError as exc:
        LOGGER.error("Especificación inválida: %s", exc)
        return 1
    except SparseRecoveryError as exc:
        LOGGER.error("%s", exc)
        return exc.exit_code
    except ValueError as exc:
        LOGGER.error("Entrada inválida: %s", exc)
        return 1
    except OSError as exc:
        LOGGER.error("No se pudo acceder al archivo: %s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
