"""
流水线编排：每个阶段读取上一阶段的标准产物并写出自己的产物。

images -> pages/*.json -> document.json -> document.enriched.json -> exports/ + index/
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .config import PipelineConfig
from .errors import ArtifactError, ConfigError
from .manager import ArtifactStore
from .modules import DocumentRecord, PageElement, PageExtraction
from .schema import ExtractionSchema, load_schema
from ..enrich import DocumentExporter, RemoteKBClient, enrich_document, load_gazetteer
from ..evaluate import (
    LayoutScore, MetricReport, TranscriptPair, compute_metric_report, effort_projection, layout_f1_corpus,
    report, throughput,
)
from ..extract import ExtractionBatch, ExtractionPlan, PageImage, extract_document
from ..llm import BaseEmbedder, BaseLLM, create_embedder, create_llm
from ..preprocess import PageDetector, create_detector, run_chain
from ..rag import Answer, ChunkIndex, RouterModel, answer, build_chunk_index, ingest
from ..refine import refine_document
from ..utils.id_utils import natural_key
from ..utils.image_utils import list_images, load_image, save_png
from ..utils.logging import get_logger, log_exception, stage_timer

STAGES = ("preprocess", "extract", "refine", "enrich", "ingest", "eval")


def _read_optional(path: Optional[str]) -> Optional[str]:
    if not path:
        return None
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactError(f"cannot read {path}: {e}") from e


def _text_files(directory: str, label: str) -> Dict[str, str]:
    """目录中的 *.txt：文件名（不含后缀）-> 文本"""
    root = Path(directory)
    if not root.is_dir():
        raise ArtifactError(f"{label} directory not found: {root}")
    files = sorted(root.glob("*.txt"), key=lambda p: natural_key(p.name))
    if not files:
        raise ArtifactError(f"{label} directory is empty: {root}")
    return {p.stem: p.read_text(encoding="utf-8") for p in files}


class PipelineRunner:
    """
    按配置运行流水线各阶段。

    参数:
        config: 已加载并解析路径的 PipelineConfig
        backends: 可选的后端注入（llm / refiner / inference / answer / embedder / detector），
                  未提供时按配置创建
    属性:
        store: 产物目录
        logger: 日志记录器
    """

    def __init__(self, config: PipelineConfig, backends: Optional[Dict[str, Any]] = None):
        self.config = config
        self.store = ArtifactStore(config.output_dir)
        self._backends: Dict[str, Any] = dict(backends or {})
        self._schema: Optional[ExtractionSchema] = None
        self.logger = get_logger("pipeline")

    @property
    def schema(self) -> ExtractionSchema:
        if self._schema is None:
            self._schema = load_schema(self.config.extraction.schema_file)
        return self._schema

    def _backend(self, name: str, factory) -> Any:
        if name not in self._backends:
            self._backends[name] = factory()
        return self._backends[name]

    @property
    def embedder(self) -> BaseEmbedder:
        return self._backend("embedder", lambda: create_embedder(self.config.enrichment.embedding))

    def _plan(self) -> ExtractionPlan:
        ext = self.config.extraction
        primary: BaseLLM = self._backend("llm", lambda: create_llm(ext.backend))
        refiner = None
        if ext.path == "C":
            refiner = self._backend("refiner", lambda: create_llm(ext.refiner))
        return ExtractionPlan(path=ext.path, primary=primary, refiner=refiner,
                              allow_restructure=ext.allow_restructure)

    # ---- preprocess ----

    @log_exception
    async def preprocess(self) -> List[Path]:
        """原始图像 -> images/page-NNNN.png，页码按文件名自然排序从 1 开始"""
        files = list_images(self.config.input_dir)
        if not files:
            raise ArtifactError(f"no images found in {self.config.input_dir}")
        detector: PageDetector = self._backend(
            "detector", lambda: create_detector(self.config.preprocess.detector_endpoint))
        self.store.clear_dir(self.store.images_dir, "page-*.png")
        written = []
        for page_number, path in enumerate(files, start=1):
            img = run_chain(self.config.preprocess, load_image(path), detector)
            written.append(Path(save_png(img, self.store.image_path(page_number))))
            self.logger.debug(f"[Page preprocessed] | page = {page_number} | source = {path.name} | "
                              f"size = {img.width}x{img.height}")
        self.logger.info(f"[Preprocess done] | pages = {len(written)} | steps = {len(self.config.preprocess.steps)}")
        return written

    # ---- extract ----

    def _page_images(self) -> List[PageImage]:
        return [PageImage(page_number=n, source_image_id=path.stem, image=load_image(path))
                for n, path in enumerate(self.store.image_files(), start=1)]

    @log_exception
    async def extract(self) -> ExtractionBatch:
        pages = self._page_images()
        if not pages:
            raise ArtifactError(f"no preprocessed images in {self.store.images_dir}")
        instructions = _read_optional(self.config.extraction.instructions_file)
        batch = await extract_document(self._plan(), pages, self.schema, instructions,
                                       max_in_flight=self.config.max_in_flight,
                                       strict=self.config.mode == "strict")
        self.store.clear_dir(self.store.pages_dir, "page-*.json")
        for page in batch.pages:
            await self.store.save_page(page)
        await self.store.save_failures(batch.failures)

        stats = throughput(batch.timings_ms, batch.wall_seconds)
        self.logger.info(f"[Throughput] | pages = {stats.pages} | mean_latency_ms = {stats.mean_latency_ms:.0f} | "
                         f"seconds_per_page = {stats.seconds_per_page:.3f} | "
                         f"pages_per_hour = {stats.pages_per_hour:.0f}")
        return batch

    # ---- refine ----

    @log_exception
    async def refine(self) -> DocumentRecord:
        settings = self.config.refinement
        pages = await self.store.load_pages()
        doc = refine_document(
            pages,
            schema=self.schema if settings.validate_pages else None,
            rules=settings.typography,
            resolve=settings.resolve_continuations,
            propagate=settings.propagate_metadata,
            title=self.config.title,
            source=self.config.source,
        )
        await self.store.save_document(doc)
        return doc

    # ---- enrich ----

    @log_exception
    async def enrich(self) -> DocumentRecord:
        settings = self.config.enrichment
        doc = await self.store.load_document()
        gazetteer = load_gazetteer(settings.gazetteer) if settings.gazetteer else []
        kb_client = RemoteKBClient(settings.kb_endpoint) if settings.kb_endpoint else None
        llm = None
        task_prompt = None
        if settings.inference_backend is not None:
            llm = self._backend("inference", lambda: create_llm(settings.inference_backend))
            task_prompt = _read_optional(settings.inference_prompt_file)
        enriched = await enrich_document(
            doc, gazetteer=gazetteer, kb_client=kb_client, llm=llm, task_prompt=task_prompt,
            schema=self.schema if llm is not None else None,
            threshold=settings.link_threshold, max_in_flight=self.config.max_in_flight,
        )
        await self.store.save_document(enriched, enriched=True)
        await self.store.save_unlinked(enriched)
        self.store.clear_dir(self.store.exports_dir, "*")
        DocumentExporter(self.store.exports_dir, settings.export_formats).export(enriched)
        return enriched

    # ---- ingest ----

    async def _latest_document(self) -> DocumentRecord:
        enriched = self.store.document_path(enriched=True).exists()
        return await self.store.load_document(enriched=enriched)

    @log_exception
    async def ingest(self) -> ChunkIndex:
        retrieval = self.config.rag.retrieval
        doc = await self._latest_document()
        chunks = ingest(doc, retrieval.max_words_per_chunk, retrieval.year_bounds)
        chunk_index = await build_chunk_index(chunks, self.embedder)
        self.store.clear_dir(self.store.index_dir, "*")
        chunk_index.save(self.store.index_dir)
        return chunk_index

    # ---- query ----

    async def load_router(self) -> RouterModel:
        path = self.config.rag.router_file
        if not path:
            raise ConfigError("rag.router_file is required for queries")
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read router prototypes {path}: {e}") from e
        return await RouterModel.build(data, self.embedder)

    def answer_llm(self) -> BaseLLM:
        backend = self.config.rag.answer_backend
        if backend is None and "answer" not in self._backends:
            raise ConfigError("rag.answer_backend is required for queries")
        return self._backend("answer", lambda: create_llm(backend))

    @log_exception
    async def query(self, query: str, chunk_index: Optional[ChunkIndex] = None,
                    router: Optional[RouterModel] = None) -> Answer:
        chunk_index = chunk_index or ChunkIndex.load(self.store.index_dir)
        router = router or await self.load_router()
        return await answer(query, chunk_index, router, self.answer_llm(), self.embedder,
                            self.config.rag.retrieval)

    # ---- eval ----

    async def _hypotheses(self) -> Dict[str, str]:
        settings = self.config.evaluation
        if settings.hypothesis_dir:
            return _text_files(settings.hypothesis_dir, "hypothesis")
        pages = await self.store.load_pages()
        return {self.store.page_path(p.page_number).stem: p.text for p in pages}

    def _layout_pairs(self, pages: List[PageExtraction]) -> List[Tuple[List[PageElement], List[PageElement]]]:
        gold_dir = Path(self.config.evaluation.layout_gold_dir)
        if not gold_dir.is_dir():
            raise ArtifactError(f"layout gold directory not found: {gold_dir}")
        predicted = {self.store.page_path(p.page_number).stem: list(p.elements) for p in pages}
        pairs = []
        for path in sorted(gold_dir.glob("*.json"), key=lambda p: natural_key(p.name)):
            try:
                gold = [PageElement.from_instance(e) for e in json.loads(path.read_text(encoding="utf-8"))]
            except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
                raise ArtifactError(f"cannot read layout gold {path}: {e}") from e
            pairs.append((predicted.get(path.stem, []), gold))
        if not pairs:
            raise ArtifactError(f"layout gold directory is empty: {gold_dir}")
        return pairs

    @log_exception
    async def evaluate(self) -> Dict[str, Any]:
        """转写错误率（必需参考目录）+ 版面 F1 + 与基线的比较和工作量推算（可选）"""
        settings = self.config.evaluation
        if not settings.reference_dir:
            raise ConfigError("evaluation.reference_dir is required for 'eval'")
        references = _text_files(settings.reference_dir, "reference")
        hypotheses = await self._hypotheses()
        if not hypotheses:
            raise ArtifactError("no hypothesis transcripts to evaluate")
        pairs = [TranscriptPair(page_id=page_id, reference=text, hypothesis=hypotheses.get(page_id, ""))
                 for page_id, text in references.items()]
        metrics: MetricReport = compute_metric_report(pairs)
        result: Dict[str, Any] = {"pages": metrics.pages, "metrics": metrics.model_dump(mode="json")}
        lines = [f"Pages: {metrics.pages}"]
        lines += [f"{key}: {value:.3f}" for key, value in metrics.rates().items()]

        if settings.layout_gold_dir:
            score: LayoutScore = layout_f1_corpus(self._layout_pairs(await self.store.load_pages()),
                                                  settings.layout)
            result["layout"] = score.model_dump(mode="json", exclude={"matches"})
            lines.append(f"layout_f1: {score.f1:.3f} (P {score.precision:.3f}, R {score.recall:.3f})")

        if settings.baseline:
            comparison = report(settings.baseline, metrics)
            result["comparison"] = comparison.model_dump(mode="json")
            lines += ["", comparison.to_table().rstrip("\n")]
            if settings.base_seconds_per_page and settings.baseline.get("wer_raw"):
                effort = effort_projection(settings.base_seconds_per_page, settings.baseline["wer_raw"],
                                           metrics.wer_raw, metrics.pages, settings.base_machine_seconds,
                                           settings.sys_machine_seconds)
                result["effort"] = effort.model_dump(mode="json")
                lines.append(f"effort: {effort.base_total_hours:.1f} h -> {effort.sys_total_hours:.1f} h")

        await self.store.write_text(self.store.eval_dir / "report.json",
                                    json.dumps(result, ensure_ascii=False, indent=2) + "\n")
        await self.store.write_text(self.store.eval_dir / "report.txt", "\n".join(lines) + "\n")
        self.logger.info(f"[Evaluation done] | pages = {metrics.pages} | wer_raw = {metrics.wer_raw:.3f} | "
                         f"cer_raw = {metrics.cer_raw:.3f}")
        return result

    # ---- all ----

    @log_exception
    async def run_all(self) -> Dict[str, Any]:
        """依次运行全部阶段；配置了参考目录时最后做自评估"""
        await self.preprocess()
        batch = await self.extract()
        doc = await self.refine()
        await self.enrich()
        chunk_index = await self.ingest()
        summary: Dict[str, Any] = {"pages": len(batch.pages), "failures": len(batch.failures),
                                   "units": len(doc.units), "chunks": len(chunk_index.chunks)}
        if self.config.evaluation.reference_dir:
            summary["eval"] = await self.evaluate()
        return summary

    async def run(self, stage: str) -> Any:
        handlers = {
            "preprocess": self.preprocess, "extract": self.extract, "refine": self.refine,
            "enrich": self.enrich, "ingest": self.ingest, "eval": self.evaluate, "all": self.run_all,
        }
        if stage not in handlers:
            raise ConfigError(f"unknown stage '{stage}'")
        with stage_timer(stage):
            return await handlers[stage]()
