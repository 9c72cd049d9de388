#!/usr/bin/env python3
"""
ORC Rule Engine - Main Orchestration Script
Validates populations against an ORM schema, evaluates information descriptors
and checks domain rules and graphical constraints over snapshot sequences
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import pandas as pd

sys.path.append(os.path.dirname(__file__))

from constraint_kit import RuleOutcome, check, evaluate_rule, load_constraints
from descriptor_frontend import check_variable_name, descriptor_path, load_rules
from errors import ModelFormatError, OrcError
from freq_domain import FrequencyDomain
from logic_core import EvalContext, Variable, render_formula
from orm_model import AxiomViolation, load_model, load_population
from path_engine import eval_path, render_path, rewrite

logger = logging.getLogger(__name__)

COMMANDS = ('check', 'eval', 'validate', 'setup')
DEFAULT_CONFIG = {
    "domain": "nat",
    "format": "text",
    "log_level": "WARNING",
    "max_witnesses": 25,
}


def load_config(config_path: str = "config.json") -> Dict:
    """Load configuration from file, falling back to the defaults for missing keys"""
    config = dict(DEFAULT_CONFIG)
    try:
        with open(config_path, 'r') as f:
            config.update(json.load(f))
    except FileNotFoundError:
        pass
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"Invalid JSON: {e.msg}", file=config_path, line=e.lineno)
    return config


def create_sample_config(path: str = "config.json") -> None:
    with open(path, 'w') as f:
        json.dump(DEFAULT_CONFIG, f, indent=2)
    print(f"📁 Sample {path} created")


@dataclass
class RunConfig:
    command: str
    model_path: Optional[str] = None
    population_path: Optional[str] = None
    rules_path: Optional[str] = None
    constraints_path: Optional[str] = None
    domain: FrequencyDomain = field(default_factory=lambda: FrequencyDomain.parse(DEFAULT_CONFIG['domain']))
    at_time: Optional[int] = None
    output_format: str = 'text'
    expr: Optional[str] = None
    explain: bool = False
    variables: List[str] = field(default_factory=list)
    max_witnesses: int = DEFAULT_CONFIG['max_witnesses']

    def missing(self) -> List[str]:
        """Flags the command needs but did not get"""
        needed = []
        if self.command in ('check', 'eval', 'validate'):
            needed += [('--model', self.model_path), ('--population', self.population_path)]
        if self.command == 'eval':
            needed.append(('expression', self.expr))
        absent = [flag for flag, value in needed if not value]
        if self.command == 'check' and not (self.rules_path or self.constraints_path):
            absent.append('--rules or --constraints')
        return absent


@dataclass
class Report:
    rules: List[RuleOutcome] = field(default_factory=list)
    constraints: List[RuleOutcome] = field(default_factory=list)
    axiom_violations: List[AxiomViolation] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return not self.axiom_violations and all(r.verdict for r in self.rules + self.constraints)

    def to_json(self) -> dict:
        return {
            'verdict': 'pass' if self.verdict else 'fail',
            'warnings': list(self.warnings),
            'axiomViolations': [v.to_json() for v in self.axiom_violations],
            'rules': [r.to_json() for r in self.rules],
            'constraints': [r.to_json() for r in self.constraints],
        }


def _show(value) -> str:
    if value is None:
        return '∅'
    if isinstance(value, tuple):
        return '⟨' + ','.join(_show(item) for item in value) + '⟩'
    return str(value)


def summary_frame(outcomes: List[RuleOutcome]) -> pd.DataFrame:
    """One row per rule: name, verdict and the frequency at each evaluated time"""
    records = []
    for outcome in outcomes:
        record = {'name': outcome.name, 'verdict': 'pass' if outcome.verdict else 'FAIL'}
        if outcome.kind:
            record['kind'] = outcome.kind
        for t, value in outcome.frequencies:
            record[f"t={t}"] = str(value)
        records.append(record)
    frame = pd.DataFrame(records)
    leading = [c for c in ('name', 'kind', 'verdict') if c in frame.columns]
    return frame[leading + [c for c in frame.columns if c not in leading]].fillna('')


def render_report(report: Report) -> str:
    lines = []
    if report.axiom_violations:
        lines.append(f"🚨 {len(report.axiom_violations)} population axiom violations")
        for v in report.axiom_violations:
            lines.append(f"   {v.kind.value} at t={v.time}: {v.message}")
    else:
        lines.append("✅ Population satisfies the schema axioms")

    for title, outcomes in (("📋 Rules", report.rules), ("🧩 Constraints", report.constraints)):
        if not outcomes:
            continue
        lines.append("")
        lines.append(title)
        lines.append(summary_frame(outcomes).to_string(index=False))
        for outcome in outcomes:
            if outcome.verdict:
                continue
            lines.append(f"❌ {outcome.name}: {outcome.source}")
            for t, head, tail in outcome.witnesses:
                lines.append(f"   t={t}: {_show(head)} → {_show(tail)}")

    if report.warnings:
        lines.append("")
        lines.append("⚠️  Warnings")
        lines.extend(f"   {w}" for w in report.warnings)

    lines.append("")
    failed = sum(not r.verdict for r in report.rules + report.constraints)
    if report.verdict:
        lines.append("✅ All checks passed")
    else:
        lines.append(f"❌ {failed} failing rules/constraints, {len(report.axiom_violations)} axiom violations")
    return "\n".join(lines)


class OrcOrchestrator:
    """Loads the inputs named by a RunConfig and runs one command"""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.model = load_model(cfg.model_path)
        self.seq = load_population(self.model, cfg.population_path)
        logger.info(f"Loaded {len(self.model.type_ids())} types and {len(self.seq.snapshots)} snapshots")

    def cmd_validate(self) -> Report:
        return Report(axiom_violations=self.model.validate(self.seq))

    def cmd_check(self) -> Report:
        cfg = self.cfg
        report = self.cmd_validate()
        diagnostics: List[str] = []
        if cfg.rules_path:
            for rule in load_rules(self.model, cfg.rules_path):
                report.rules.append(evaluate_rule(
                    self.model, self.seq, rule.formula, cfg.domain, rule.name, source=rule.source,
                    at=cfg.at_time, diagnostics=diagnostics, max_witnesses=cfg.max_witnesses))
        if cfg.constraints_path:
            constraints = load_constraints(cfg.constraints_path)
            result = check(self.model, self.seq, constraints, cfg.domain, at=cfg.at_time,
                           max_witnesses=cfg.max_witnesses)
            report.constraints = result.results
            diagnostics.extend(w for w in result.warnings if w not in diagnostics)
        report.warnings = diagnostics
        return report

    def cmd_eval(self) -> dict:
        cfg = self.cfg
        variables = [check_variable_name(self.model, name) for name in cfg.variables]
        path = descriptor_path(self.model, cfg.expr, variables)
        t = self.seq.snapshot_at(cfg.at_time).time if cfg.at_time is not None else self.seq.first_time
        ctx = EvalContext(self.model, self.seq, cfg.domain, t)
        table = eval_path(ctx, path)
        result = {
            'expression': cfg.expr,
            'path': render_path(path),
            'time': t,
            'variables': list(table.variables),
            'rows': table.to_json(),
            'warnings': list(ctx.diagnostics),
            'table': table,
        }
        if cfg.explain:
            result['formula'] = render_formula(rewrite(path, Variable('x'), Variable('y')))
        return result


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="ORC rule engine for ORM schemas and populations")
    parser.add_argument('command', choices=COMMANDS, help='Operation mode')
    parser.add_argument('expr', nargs='?', help='Information descriptor (eval only)')
    parser.add_argument('-m', '--model', help='Model JSON file')
    parser.add_argument('-p', '--population', help='Population JSON file')
    parser.add_argument('-r', '--rules', help='Rules text file')
    parser.add_argument('-c', '--constraints', help='Constraints JSON file')
    parser.add_argument('--domain', help='Frequency domain: bool, nat, int, dist-bool, dist-nat, dist-int')
    parser.add_argument('--at', type=int, help='Evaluate only at this time')
    parser.add_argument('--format', choices=['text', 'json'], help='Output format')
    parser.add_argument('--config', default='config.json', help='Configuration file path')
    parser.add_argument('--explain', action='store_true', help='Show the compiled path and its formula (eval)')
    parser.add_argument('--var', action='append', default=[], metavar='NAME',
                        help='Declare an omega-variable for the descriptor (eval, repeatable)')
    parser.add_argument('--verbose', action='store_true', help='Log progress')
    parser.add_argument('--debug', action='store_true', help='Log evaluation details')
    return parser


def _report_error(error: dict, output_format: str) -> None:
    if output_format == 'json':
        print(json.dumps({'error': error}, ensure_ascii=False, indent=2))
        return
    where = ':'.join(str(part) for part in (error.get('file'), error.get('line')) if part is not None)
    prefix = f"{where}: " if where else ""
    print(f"{prefix}{error['message']}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == 'setup':
        create_sample_config(args.config)
        return 0

    output_format = args.format or 'text'
    try:
        config = load_config(args.config)
        output_format = args.format or config['format']
        level = logging.DEBUG if args.debug else logging.INFO if args.verbose else config['log_level']
        logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

        cfg = RunConfig(
            command=args.command,
            model_path=args.model,
            population_path=args.population,
            rules_path=args.rules,
            constraints_path=args.constraints,
            domain=FrequencyDomain.parse(args.domain or config['domain']),
            at_time=args.at,
            output_format=output_format,
            expr=args.expr,
            explain=args.explain,
            variables=args.var,
            max_witnesses=int(config['max_witnesses']),
        )
        absent = cfg.missing()
        if absent:
            parser.error(f"{cfg.command} needs {', '.join(absent)}")

        orchestrator = OrcOrchestrator(cfg)
        if cfg.command == 'eval':
            result = orchestrator.cmd_eval()
            table = result.pop('table')
            if output_format == 'json':
                print(json.dumps(result, ensure_ascii=False, indent=2))
            else:
                print(f"🔎 {result['path']} at t={result['time']}")
                if cfg.explain:
                    print(f"   {result['formula']}")
                if result['variables']:
                    print(f"   rows joined over {', '.join(result['variables'])}")
                print(table.render())
                for w in result['warnings']:
                    print(f"⚠️  {w}")
            return 0

        report = orchestrator.cmd_validate() if cfg.command == 'validate' else orchestrator.cmd_check()
        if output_format == 'json':
            print(json.dumps(report.to_json(), ensure_ascii=False, indent=2))
        else:
            print(render_report(report))
        return 0 if report.verdict else 1

    except OrcError as e:
        _report_error(e.diagnostic(), output_format)
        return 2
    except OSError as e:
        _report_error({'file': e.filename, 'line': None, 'error': type(e).__name__,
                       'message': e.strerror or str(e)}, output_format)
        return 2


if __name__ == "__main__":
    sys.exit(main())
