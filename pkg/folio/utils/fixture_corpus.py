"""
内置的 6 页合成语料（米兰编年史），用于离线端到端运行与测试。

包含：页面图像、专用模型的 fixture 响应、转写与版面真值、实体规范文件、
路由原型、抽取模式、回答 fixture 与可直接运行的 config.json。
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from ..core.raster import RasterImage
from .id_utils import page_file_name
from .image_utils import save_png

PAGE_WIDTH = 600
PAGE_HEIGHT = 800
PAPER_TONE = 245
INK = 30

# 抽取模式（JSON Schema 子集）
SCHEMA: Dict[str, Any] = {
    "type": "object",
    "properties": {
        "bbox": {"type": "array", "items": {"type": "integer"}},
        "category": {"type": "string", "enum": ["title", "text", "header", "footnote", "figure", "table"]},
        "text": {"type": "string"},
        "speaker": {"type": "string"},
        "date": {"type": "string"},
        "place": {"type": "string"},
        "entities": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "mention": {"type": "string"},
                    "type": {"type": "string", "enum": ["person", "institution", "place"]},
                },
            },
        },
    },
    "required": ["bbox", "category", "text"],
}


def _el(bbox, category, text, **extra) -> Dict[str, Any]:
    element: Dict[str, Any] = {"bbox": list(bbox), "category": category, "text": text}
    entities = extra.pop("entities", None)
    element.update(extra)
    if entities:
        element["entities"] = [{"mention": m, "type": t} for m, t in entities]
    return element


# 每页元素（阅读顺序）；第 1->2、2->3、5->6 页存在跨页续接，第 1 页那一段以连字符断词
PAGES: List[List[Dict[str, Any]]] = [
    [
        _el((40, 20, 560, 50), "header", "CHRONICLE OF MILAN"),
        _el((60, 70, 540, 120), "title", "Book One: The Sforza Succession"),
        _el((60, 140, 540, 400), "text",
            "In 1450 Francesco Sforza entered Milan and was acclaimed duke by the people. "
            "The chancellor Cicco Simonetta served the new court with great diligence.",
            date="1450", place="Milan",
            entities=[("Francesco Sforza", "person"), ("Milan", "place"), ("Cicco Simonetta", "person")]),
        _el((60, 420, 540, 720), "text",
            "The Ducal Chancery kept registers of every letter sent to Venice and Florence, "
            "and its secretaries recorded the names of the ambassa-",
            entities=[("Ducal Chancery", "institution")]),
        _el((60, 740, 540, 780), "footnote", "1 The registers survive in the state archive of Milan."),
    ],
    [
        _el((60, 40, 540, 200), "text", "dors who came to the court."),
        _el((60, 220, 540, 700), "text",
            "After the death of Francesco the duchy passed to his son Galeazzo Maria, whose rule was "
            "marked by splendour and by growing discontent among the nobles of the city",
            date="1466", place="Milan"),
    ],
    [
        _el((60, 40, 540, 160), "text", "and the merchants of the guilds."),
        _el((60, 180, 540, 460), "text",
            "In 1477 Lodovico Sforza was exiled from Milan after a failed conspiracy against "
            "the regent Bona of Savoy.",
            date="1477", place="Milan",
            entities=[("Lodovico Sforza", "person"), ("Milan", "place"), ("Bona of Savoy", "person")]),
        _el((60, 720, 540, 780), "footnote", "2 Bona of Savoy governed in the name of her young son."),
    ],
    [
        _el((60, 40, 540, 100), "title", "Book Two: The Rise of Ludovico"),
        _el((60, 120, 540, 400), "text",
            "In 1479 Ludovico returned to Milan, and Cicco Simonetta was arrested by order of the new council.",
            date="1479", place="Milan",
            entities=[("Milan", "place"), ("Cicco Simonetta", "person")]),
        _el((100, 440, 500, 740), "figure", ""),
    ],
    [
        _el((60, 40, 540, 360), "text",
            "In 1485 a great plague struck the city and the court withdrew to Vigevano, "
            "where the duke remained for many months.",
            date="1485", place="Vigevano", entities=[("Vigevano", "place")]),
        _el((60, 380, 540, 700), "text", "Of these years the chronicler Bernardino Corio",
            speaker="Bernardino Corio", entities=[("Bernardino Corio", "person")]),
        _el((60, 720, 540, 780), "footnote",
            "3 The plague of 1485 is also recorded in the registers of the chancery."),
    ],
    [
        _el((60, 40, 540, 200), "text", "wrote with open admiration for the duke and his court."),
        _el((60, 220, 540, 420), "table",
            "1450 Francesco Sforza enters Milan; 1477 exile of Lodovico; 1485 plague"),
        _el((60, 440, 540, 560), "text", "Here ends the second book."),
    ],
]

GAZETTEER = [
    ("folio:P001", "person", "Francesco Sforza", "Francesco I Sforza"),
    ("folio:P002", "person", "Ludovico Sforza", "Ludovico il Moro"),
    ("folio:P003", "person", "Cicco Simonetta"),
    ("folio:P004", "person", "Bona of Savoy", "Bona di Savoia"),
    ("folio:P005", "person", "Bernardino Corio"),
    ("folio:L001", "place", "Milan", "Milano"),
    ("folio:L002", "place", "Vigevano"),
    ("folio:I001", "institution", "Ducal Chancery", "Cancelleria ducale"),
]

ROUTER = {
    "specific": [
        "What happened in 1477?",
        "Who was arrested by order of the council?",
        "When did Francesco Sforza enter Milan?",
    ],
    "general": [
        "What are the main themes of the chronicle?",
        "How does the chronicler describe the court?",
        "Summarise the style of the narrative.",
    ],
    "margin": 0.0,
}

DEFAULT_ANSWER = ("The chronicle records these events in the cited passages; "
                  "see the chunk identifiers for page references.")


def page_text(elements: List[Dict[str, Any]]) -> str:
    """参考转写：非空元素文本按阅读顺序以换行连接"""
    return "\n".join(e["text"] for e in elements if e["text"])


def render_page(elements: List[Dict[str, Any]]) -> RasterImage:
    """把元素画成墨迹条：文本类为横线，图像类为灰色块"""
    pixels = np.full((PAGE_HEIGHT, PAGE_WIDTH), PAPER_TONE, dtype=np.uint8)
    for e in elements:
        x0, y0, x1, y1 = e["bbox"]
        if e["category"] in ("figure", "table"):
            pixels[y0:y1, x0:x1] = 120
            pixels[y0:y0 + 3, x0:x1] = INK
            pixels[y1 - 3:y1, x0:x1] = INK
            continue
        for y in range(y0 + 6, y1 - 6, 14):
            pixels[y:y + 6, x0 + 4:x1 - 4] = INK
    return RasterImage.from_array(pixels)


def _response(page_number: int, elements: List[Dict[str, Any]]) -> str:
    # 模拟真实模型输出的几种包装形式
    payload = json.dumps(elements, ensure_ascii=False, indent=2)
    if page_number == 2:
        return f"```json\n{payload}\n```\n"
    if page_number == 3:
        return f"Here are the elements:\n{payload}\n"
    if page_number == 5:
        return json.dumps({"elements": elements}, ensure_ascii=False, indent=2) + "\n"
    return payload + "\n"


def _config() -> Dict[str, Any]:
    return {
        "input_dir": "input",
        "output_dir": "output",
        "title": "Chronicle of Milan (synthetic)",
        "source": {"collection": "folio fixtures", "pages": str(len(PAGES))},
        "max_in_flight": 4,
        "mode": "strict",
        "preprocess": {"steps": ["grayscale"]},
        "extraction": {
            "path": "A",
            "backend": {"provider": "fixture", "model": "layout-fixture", "mode": "specialised",
                        "fixture_dir": "fixtures/extraction"},
            "schema_file": "schema.json",
        },
        "enrichment": {
            "gazetteer": "gazetteer.tsv",
            "export_formats": ["tei", "csv", "jsonl"],
            "embedding": {"provider": "fixture", "dimension": 64},
        },
        "rag": {
            "router_file": "router.json",
            "answer_backend": {"provider": "fixture", "model": "answer-fixture", "mode": "general",
                               "fixture_dir": "fixtures/answers"},
            "retrieval": {"k_specific": 3, "k_general": 4, "pool": 8, "max_words_per_chunk": 60},
        },
        "evaluation": {
            "reference_dir": "ground_truth/text",
            "layout_gold_dir": "ground_truth/layout",
            "baseline": {"wer_raw": 0.034, "cer_raw": 0.014},
            "base_seconds_per_page": 135,
        },
    }


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def write_fixture_corpus(directory: Union[str, Path]) -> Path:
    """在 directory 下生成完整语料，返回 config.json 路径"""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    for number, elements in enumerate(PAGES, start=1):
        save_png(render_page(elements), root / "input" / f"scan-{number:02d}.png")
        _write(root / "fixtures" / "extraction" / page_file_name(number, ".txt"), _response(number, elements))
        _write(root / "ground_truth" / "text" / page_file_name(number, ".txt"), page_text(elements))
        _write(root / "ground_truth" / "layout" / page_file_name(number),
               json.dumps([{"bbox": e["bbox"], "category": e["category"]} for e in elements], indent=2) + "\n")
    _write(root / "fixtures" / "answers" / "_default.txt", DEFAULT_ANSWER)
    _write(root / "schema.json", json.dumps(SCHEMA, indent=2) + "\n")
    _write(root / "router.json", json.dumps(ROUTER, indent=2) + "\n")
    _write(root / "gazetteer.tsv",
           "# kb_id\ttype\tlabel\taliases...\n" + "".join("\t".join(row) + "\n" for row in GAZETTEER))
    config_path = root / "config.json"
    _write(config_path, json.dumps(_config(), ensure_ascii=False, indent=2) + "\n")
    return config_path
