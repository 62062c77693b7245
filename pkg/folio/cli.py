"""
命令行入口：folio <stage> --config config.json [--set key=value ...]

退出码：0 成功 | 1 未预期错误 | 2 配置错误 | 3 I/O 错误 | 4 后端错误 | 5 校验错误
"""

import sys
import json
import asyncio
import argparse
from typing import Any, List, Optional

from dotenv import load_dotenv

from .core.config import describe_keys, load_config
from .core.errors import (
    ArtifactError, BackendError, ConfigError, EmptyReferenceError, FolioError, PreprocessError, ValidationFailure,
)
from .core.pipeline import PipelineRunner
from .rag import ChunkIndex
from .utils.fixture_corpus import write_fixture_corpus
from .utils.logging import get_logger

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_BACKEND = 4
EXIT_VALIDATION = 5

# 顺序有意义：更具体的类型在前
EXIT_CODES = (
    (ConfigError, EXIT_CONFIG),
    (ArtifactError, EXIT_IO),
    (BackendError, EXIT_BACKEND),
    (ValidationFailure, EXIT_VALIDATION),
    (PreprocessError, EXIT_VALIDATION),
    (EmptyReferenceError, EXIT_VALIDATION),
)

STAGE_HELP = {
    "preprocess": "原始图像 -> images/",
    "extract": "images/ -> pages/page-NNNN.json",
    "refine": "pages/ -> document.json",
    "enrich": "document.json -> document.enriched.json + exports/",
    "ingest": "文档 -> index/（检索块 + 向量）",
    "eval": "转写错误率、版面 F1 -> eval/",
    "query": "检索增强问答；不给问题时进入交互模式",
    "all": "依次运行全部阶段",
}

logger = get_logger("cli")


def exit_code_for(error: BaseException) -> int:
    for error_type, code in EXIT_CODES:
        if isinstance(error, error_type):
            return code
    return EXIT_UNEXPECTED


def _keys_epilog() -> str:
    rows = describe_keys()
    width = max(len(key) for key, _ in rows)
    return "configuration keys (use --set key=value):\n" + "\n".join(
        f"  {key.ljust(width)}  {desc}" for key, desc in rows)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-c", "--config", help="配置文件（JSON）")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="覆盖任意配置键，值按 JSON 解析，可重复")
    parser.add_argument("--input-dir", help="= --set input_dir=...")
    parser.add_argument("--output-dir", help="= --set output_dir=...")
    parser.add_argument("--mode", choices=("strict", "partial"), help="= --set mode=...")
    parser.add_argument("--max-in-flight", type=int, help="= --set max_in_flight=...")
    parser.add_argument("--path", choices=("A", "B", "C"), help="= --set extraction.path=...")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="folio", description="历史文献数字化流水线",
        epilog=_keys_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for stage, help_text in STAGE_HELP.items():
        stage_parser = sub.add_parser(stage, help=help_text, epilog=_keys_epilog(),
                                      formatter_class=argparse.RawDescriptionHelpFormatter)
        _add_common(stage_parser)
        if stage == "query":
            stage_parser.add_argument("query", nargs="?", help="问题文本")
    fixtures = sub.add_parser("fixtures", help="生成内置的 6 页合成语料")
    fixtures.add_argument("directory", help="输出目录")
    return parser


def _overrides(args: argparse.Namespace) -> List[str]:
    overrides = list(args.overrides)
    flags = (("input_dir", args.input_dir), ("output_dir", args.output_dir), ("mode", args.mode),
             ("max_in_flight", args.max_in_flight), ("extraction.path", args.path))
    for key, value in flags:
        if value is not None:
            overrides.append(f"{key}={json.dumps(value)}")
    return overrides


def _print_json(data: Any) -> None:
    print(json.dumps(data, ensure_ascii=False, indent=2))


async def _repl(runner: PipelineRunner) -> None:
    chunk_index = ChunkIndex.load(runner.store.index_dir)
    router = await runner.load_router()
    while True:
        try:
            query = input("folio> ").strip()
        except EOFError:
            break
        if query in ("exit", "quit"):
            break
        if not query:
            continue
        try:
            result = await runner.query(query, chunk_index=chunk_index, router=router)
        except BackendError as e:
            print(f"error: {e}", file=sys.stderr)
            continue
        _print_json(result.public())


async def _run(args: argparse.Namespace) -> Any:
    config = load_config(args.config, _overrides(args))
    runner = PipelineRunner(config)
    if args.command == "query":
        if args.query is None:
            await _repl(runner)
            return None
        return (await runner.query(args.query)).public()
    result = await runner.run(args.command)
    return result if args.command in ("all", "eval") else None


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fixtures":
            print(write_fixture_corpus(args.directory))
            return EXIT_OK
        result = asyncio.run(_run(args))
    except FolioError as e:
        code = exit_code_for(e)
        logger.error(f"[Command failed] | command = {args.command} | exit = {code} | {type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return code
    except OSError as e:
        logger.error(f"[Command failed] | command = {args.command} | exit = {EXIT_IO} | {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except Exception as e:
        logger.exception(f"[Unexpected error] | command = {args.command} | {type(e).__name__}: {e}")
        return EXIT_UNEXPECTED
    if result is not None:
        _print_json(result)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
