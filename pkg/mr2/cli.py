#!/usr/bin/env python3
"""
CLI para estimação MR², exportação de instrumentos e simulação de Monte Carlo
"""
import argparse
import logging
import re
import sys
from typing import Callable, List, Optional, Sequence, TextIO

import pandas as pd

from config.settings import settings
from mr2.config import MR2Config
from mr2.dataset import load_instruments_csv
from mr2.dependencies import EstimationServiceFactory
from mr2.exceptions import CapacityError, MR2Error, OutputError, ParameterError, WeakIdentificationError
from mr2.instruments import CovariateAdjustment, build_instruments, build_weighted_instruments, estimate_weights
from mr2.models import EstimateOutput, FitSummary, HausmanSummary
from mr2.montecarlo import format_table, list_presets, load_scenario, preset, run
from mr2.subsets import enumerate_family, partial_id_interactions

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_WEAK_ID = 4

_RANGE = re.compile(r"^(?P<prefix>\D*)(?P<start>\d+)\.\.(?P=prefix)?(?P<end>\d+)$")


def parse_columns(text: Optional[str]) -> List[str]:
    """Lista de colunas separada por vírgulas; aceita faixas como G1..G5"""
    columns: List[str] = []
    for part in (text or "").split(","):
        part = part.strip()
        if not part:
            continue
        match = _RANGE.match(part)
        if match:
            start, end = int(match.group("start")), int(match.group("end"))
            if start > end:
                raise ParameterError(f"Invalid column range '{part}'")
            columns += [f"{match.group('prefix')}{i}" for i in range(start, end + 1)]
        else:
            columns.append(part)
    return columns


def parse_ints(text: Optional[str], what: str) -> List[int]:
    try:
        return [int(part) for part in (text or "").split(",") if part.strip()]
    except ValueError as e:
        raise ParameterError(f"{what} must be a comma-separated list of integers, got '{text}'") from e


def exit_code_for(error: MR2Error) -> int:
    """0 ok, 2 uso/parâmetro, 3 dados e estimação, 4 identificação fraca"""
    if isinstance(error, WeakIdentificationError):
        return EXIT_WEAK_ID
    if isinstance(error, (ParameterError, CapacityError)):
        return EXIT_USAGE
    return EXIT_DATA


def _write_output(path: Optional[str], default: TextIO, write: Callable[[TextIO], None]) -> None:
    """Escreve em path (ou no stream padrão); falhas de E/S viram OutputError"""
    if not path:
        write(default)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as stream:
            write(stream)
    except OSError as e:
        logger.error(f"Error writing {path}: {e}")
        raise OutputError(path, e.strerror or str(e)) from e


class MR2CLI:
    """CLI para interagir com o serviço de estimação"""

    def __init__(self):
        self.service = None

    def setup_services(self):
        """Configura os serviços"""
        self.service = EstimationServiceFactory.get_estimation_service()
        logger.debug("Services configured")

    def cmd_estimate(self, args: argparse.Namespace) -> int:
        instruments = parse_columns(args.instruments)
        if not instruments:
            raise ParameterError("Instrument column list is empty")
        covariates = parse_columns(args.covariates)
        k_daggers = parse_ints(args.kdag, "--kdag")
        valid = parse_ints(args.valid, "--valid")
        if args.hausman and len(k_daggers) < 2:
            raise ParameterError("--hausman needs at least two values in --kdag")

        d = self.service.load(args.data, args.outcome, args.exposure, instruments, covariates=covariates)
        fits = self.service.estimate(
            d,
            k_daggers,
            method=args.method,
            variance=args.variance,
            weighted=args.weighted,
            adjust_covariates=bool(covariates),
            valid=valid,
            eligible=args.eligible,
            bootstrap_reps=args.bootstrap_reps,
            seed=args.seed,
        )
        output = EstimateOutput(fits=[FitSummary.from_fit(fit) for fit in fits])
        if args.hausman:
            output.hausman = [HausmanSummary.from_result(r) for r in self.service.hausman(fits, variance=args.variance)]

        _write_output(args.output, sys.stdout, lambda s: s.write(output.model_dump_json(indent=2) + "\n"))
        return EXIT_OK

    def cmd_simulate(self, args: argparse.Namespace) -> int:
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        overrides = {"reps": args.reps, "seed": args.seed, "n": args.n}
        if args.preset:
            if args.preset not in list_presets():
                raise ParameterError(f"Unknown preset '{args.preset}'. Available presets: {', '.join(list_presets())}")
            if overrides["seed"] is None:
                overrides["seed"] = MR2Config.DEFAULT_SEED
            scenario = preset(args.preset, **overrides)
        else:
            scenario = load_scenario(args.scenario, **overrides)

        report = run(scenario, methods, n_jobs=MR2Config.validate_threads(args.threads))

        _write_output(args.output, sys.stdout, lambda s: s.write(report.model_dump_json(indent=2) + "\n"))
        _write_output(args.table, sys.stderr, lambda s: s.write(format_table(report) + "\n"))
        return EXIT_OK

    def cmd_instruments(self, args: argparse.Namespace) -> int:
        if args.partial_id:
            if args.K is None or not args.kdag:
                raise ParameterError("--partial-id requires --K and --kdag")
            k_dagger = parse_ints(args.kdag, "--kdag")[0]
            sets = partial_id_interactions(args.K, k_dagger)
            frame = pd.DataFrame({
                "order": [len(s) for s in sets],
                "members": [" ".join(str(i) for i in s) for s in sets],
            })
            logger.info(f"Exporting {len(sets)} interaction sets for K={args.K}, k_dagger={k_dagger}")
        else:
            instruments = parse_columns(args.instruments)
            if not instruments:
                raise ParameterError("Instrument column list is empty")
            if not args.data:
                raise ParameterError("--data is required unless --partial-id is given")
            covariates = parse_columns(args.covariates)
            if args.weighted and covariates:
                raise ParameterError("Weighted and covariate-adjusted instruments cannot be combined")
            k_dagger = parse_ints(args.kdag or "1", "--kdag")[0]

            d = load_instruments_csv(args.data, instruments, covariates=covariates)
            MR2Config.validate_k_dagger(k_dagger, d.k_total)
            fam = enumerate_family(d.k_total, k_dagger)
            if args.weighted:
                z = build_weighted_instruments(d, fam, estimate_weights(d))
            else:
                z = build_instruments(d, fam, adjust=CovariateAdjustment() if covariates else None)
            frame = pd.DataFrame(z.z, columns=z.column_names)

        _write_output(args.output, sys.stdout, lambda s: frame.to_csv(s, index=False, float_format="%.17g"))
        return EXIT_OK

    def run(self, args: argparse.Namespace) -> int:
        """Executa o subcomando e traduz exceções em códigos de saída"""
        commands = {
            "estimate": self.cmd_estimate,
            "simulate": self.cmd_simulate,
            "instruments": self.cmd_instruments,
        }
        try:
            self.setup_services()
            return commands[args.command](args)
        except WeakIdentificationError as e:
            guidance = "Inspect the first-stage F statistic and its significance before trusting the estimate; consider a smaller k_dagger or stronger instruments."
            print(f"error: {e}. {guidance}", file=sys.stderr)
            return EXIT_WEAK_ID
        except MR2Error as e:
            logger.debug("Command failed", exc_info=True)
            print(f"error: {e}", file=sys.stderr)
            return exit_code_for(e)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mr2", description="Estimação multiplamente robusta com variáveis instrumentais")
    parser.add_argument("--log-level", default=None, help="Nível de log (default: MR2_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="Ajusta o estimador para um ou mais k†")
    est.add_argument("--data", required=True, help="CSV de entrada")
    est.add_argument("--outcome", required=True, help="Coluna do desfecho Y")
    est.add_argument("--exposure", required=True, help="Coluna da exposição A")
    est.add_argument("--instruments", required=True, help="Colunas de G, ex.: G1,G2,G3 ou G1..G5")
    est.add_argument("--covariates", default=None, help="Colunas de M; ativa o ajuste por covariáveis")
    est.add_argument("--kdag", default="1", help="Valores de k† separados por vírgula (default: 1)")
    est.add_argument("--method", default="mr2", choices=MR2Config.METHODS, help="Estimador")
    est.add_argument("--variance", default="sandwich", choices=MR2Config.VARIANCE_MODES, help="Modo de variância")
    est.add_argument("--valid", default=None, help="Índices 1-based dos IVs válidos (método oracle)")
    est.add_argument("--weighted", action="store_true", help="Pesos para IVs binários correlacionados")
    est.add_argument("--eligible", action="store_true", help="Inclui interações de ordem <= K-k† no estágio 2")
    est.add_argument("--hausman", action="store_true", help="Teste de Hausman entre os k† pedidos")
    est.add_argument("--bootstrap-reps", type=int, default=None, help="Reamostras bootstrap (default: MR2_BOOTSTRAP_REPS)")
    est.add_argument("--seed", type=int, default=None, help="Semente do bootstrap")
    est.add_argument("--output", default=None, help="Arquivo JSON de saída (default: stdout)")

    sim = sub.add_parser("simulate", help="Executa um cenário de Monte Carlo")
    source = sim.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", default=None, help=f"Cenário pré-definido: {', '.join(list_presets())}")
    source.add_argument("--scenario", default=None, help="Arquivo de cenário KEY=VALUE")
    sim.add_argument("--reps", type=int, default=None, help="Número de replicações")
    sim.add_argument("--seed", type=int, default=None, help="Semente mestre (default: MR2_DEFAULT_SEED)")
    sim.add_argument("--n", type=int, default=None, help="Tamanho amostral")
    sim.add_argument("--methods", default="mr2,oracle,naive", help="Estimadores separados por vírgula")
    sim.add_argument("--threads", type=int, default=settings.MR2_THREADS, help="Workers paralelos (default: MR2_THREADS)")
    sim.add_argument("--output", default=None, help="Arquivo JSON do relatório (default: stdout)")
    sim.add_argument("--table", default=None, help="Arquivo da tabela de texto (default: stderr)")

    ins = sub.add_parser("instruments", help="Exporta a matriz de instrumentos gerados em CSV")
    ins.add_argument("--data", default=None, help="CSV de entrada")
    ins.add_argument("--instruments", default=None, help="Colunas de G, ex.: G1..G5")
    ins.add_argument("--covariates", default=None, help="Colunas de M para centralização ajustada")
    ins.add_argument("--kdag", default=None, help="k† (default: 1)")
    ins.add_argument("--weighted", action="store_true", help="Centralização ponderada para IVs correlacionados")
    ins.add_argument("--partial-id", action="store_true", help="Exporta os conjuntos de interação de ordem >= K-k†+1")
    ins.add_argument("--K", type=int, default=None, help="Número de IVs candidatos (com --partial-id)")
    ins.add_argument("--output", default=None, help="Arquivo CSV de saída (default: stdout)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Função principal do CLI"""
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=(args.log_level or settings.MR2_LOG_LEVEL).upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    return MR2CLI().run(args)


if __name__ == "__main__":
    sys.exit(main())
