import os
import json
import aiofiles
from pathlib import Path
from typing import List, Optional, Sequence, Union

from pydantic import ValidationError

from .errors import ArtifactError
from .modules import DocumentRecord, PageExtraction
from ..utils.id_utils import natural_key, page_file_name
from ..utils.logging import get_logger, log_exception, warn_once

DOCUMENT_FILE = "document.json"
ENRICHED_FILE = "document.enriched.json"
FAILURES_FILE = "failures.json"
UNLINKED_FILE = "unlinked.jsonl"


class ArtifactStore:
    """
    Artifact Store: 各阶段之间的文件系统契约。

    每个阶段读取前一阶段的标准产物、写出自己的产物，
    因此任一阶段都可以单独重跑。写出内容不含时间戳，重复运行字节一致。

    目录结构:
        images/page-NNNN.png        预处理后的页面
        pages/page-NNNN.json        单页抽取结果
        document.json               精化后的文档
        document.enriched.json      富集后的文档
        unlinked.jsonl              未能链接的实体提及（每行一条）
        exports/                    TEI / CSV / JSONL
        index/                      检索块 + 向量
        eval/                       report.json, report.txt
        failures.json               部分结果模式下的失败清单
    参数:
        output_dir: 产物根目录，默认取 FOLIO_OUTPUT_DIR 或 ./output
    """

    def __init__(self, output_dir: Optional[Union[str, Path]] = None):
        self.logger = get_logger("manager")
        self.output_dir = output_dir or os.getenv("FOLIO_OUTPUT_DIR", "./output")
        self._resolve_output_dir()

    def _resolve_output_dir(self):
        self.output_dir = Path(self.output_dir)
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ArtifactError(f"cannot create output directory {self.output_dir}: {e}") from e
        if not self.output_dir.is_absolute() and os.getenv("FOLIO_OUTPUT_DIR", None) is None:
            warn_once(f"[ArtifactStore] | relative output dir, using: {self.output_dir.absolute()}")

    @property
    def images_dir(self) -> Path:
        return self.output_dir / "images"

    @property
    def pages_dir(self) -> Path:
        return self.output_dir / "pages"

    @property
    def exports_dir(self) -> Path:
        return self.output_dir / "exports"

    @property
    def index_dir(self) -> Path:
        return self.output_dir / "index"

    @property
    def eval_dir(self) -> Path:
        return self.output_dir / "eval"

    @property
    def failures_path(self) -> Path:
        return self.output_dir / FAILURES_FILE

    @property
    def unlinked_path(self) -> Path:
        return self.output_dir / UNLINKED_FILE

    def document_path(self, enriched: bool = False) -> Path:
        return self.output_dir / (ENRICHED_FILE if enriched else DOCUMENT_FILE)

    def image_path(self, page_number: int) -> Path:
        return self.images_dir / page_file_name(page_number, ".png")

    def page_path(self, page_number: int) -> Path:
        return self.pages_dir / page_file_name(page_number)

    def image_files(self) -> List[Path]:
        """预处理产物（按页码排序）"""
        if not self.images_dir.is_dir():
            raise ArtifactError(f"no preprocessed images in {self.images_dir}; run 'preprocess' first")
        return sorted(self.images_dir.glob("page-*.png"), key=lambda p: natural_key(p.name))

    async def write_text(self, path: Path, text: str) -> Path:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            async with aiofiles.open(path, "w", encoding="utf-8") as f:
                await f.write(text)
        except OSError as e:
            raise ArtifactError(f"cannot write {path}: {e}") from e
        return path

    async def read_text(self, path: Path) -> str:
        try:
            async with aiofiles.open(path, "r", encoding="utf-8") as f:
                return await f.read()
        except FileNotFoundError as e:
            raise ArtifactError(f"missing artifact {path}") from e
        except OSError as e:
            raise ArtifactError(f"cannot read {path}: {e}") from e

    def clear_dir(self, directory: Path, pattern: str) -> None:
        """删除上一次运行的同类产物，保证重跑结果只取决于本次输入"""
        if directory.is_dir():
            for stale in directory.glob(pattern):
                stale.unlink()

    @log_exception
    async def save_page(self, page: PageExtraction) -> Path:
        path = await self.write_text(self.page_path(page.page_number), page.model_dump_json(indent=2) + "\n")
        self.logger.debug(f"[Save page] | page = {page.page_number} | path = {path}")
        return path

    @log_exception
    async def load_pages(self) -> List[PageExtraction]:
        files = sorted(self.pages_dir.glob("page-*.json"), key=lambda p: natural_key(p.name)) \
            if self.pages_dir.is_dir() else []
        if not files:
            raise ArtifactError(f"no page artifacts in {self.pages_dir}; run 'extract' first")
        pages = []
        for path in files:
            try:
                pages.append(PageExtraction.model_validate_json(await self.read_text(path)))
            except ValidationError as e:
                raise ArtifactError(f"corrupt page artifact {path}: {e}") from e
        return sorted(pages, key=lambda p: p.page_number)

    @log_exception
    async def save_document(self, doc: DocumentRecord, enriched: bool = False) -> Path:
        if not enriched:
            # 精化结果已变，旧的富集产物不再对应当前文档
            for stale in (self.document_path(enriched=True), self.unlinked_path):
                if stale.exists():
                    stale.unlink()
        path = await self.write_text(self.document_path(enriched), doc.model_dump_json(indent=2) + "\n")
        self.logger.info(f"[Save document] | units = {len(doc.units)} | path = {path}")
        return path

    @log_exception
    async def load_document(self, enriched: bool = False) -> DocumentRecord:
        path = self.document_path(enriched)
        try:
            return DocumentRecord.model_validate_json(await self.read_text(path))
        except ValidationError as e:
            raise ArtifactError(f"corrupt document artifact {path}: {e}") from e

    async def save_failures(self, failures: Sequence) -> Optional[Path]:
        """写出失败清单；没有失败时删除旧清单"""
        if not failures:
            if self.failures_path.exists():
                self.failures_path.unlink()
            return None
        data = [f.model_dump(mode="json") for f in failures]
        path = await self.write_text(self.failures_path, json.dumps(data, ensure_ascii=False, indent=2) + "\n")
        self.logger.warning(f"[Save failures] | count = {len(failures)} | path = {path}")
        return path

    async def save_unlinked(self, doc: DocumentRecord) -> Path:
        """逐条写出未链接的提及，附带所属单元与页码范围"""
        lines = []
        for unit in doc.units:
            for m in unit.unlinked_entities:
                record = {"unit_id": unit.id, "page_span": list(unit.page_span), **m.model_dump(mode="json")}
                lines.append(json.dumps(record, ensure_ascii=False) + "\n")
        path = await self.write_text(self.unlinked_path, "".join(lines))
        self.logger.info(f"[Save unlinked] | count = {len(lines)} | path = {path}")
        return path
