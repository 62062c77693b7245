"""语义推断：让语言模型补充原文未明示的信息，结果按模式校验后并入单元"""

from typing import Any, Dict, List

from ..core.errors import AnnotationError, OutputParseError
from ..core.modules import ContentUnit, EntityMention
from ..core.schema import ExtractionSchema, Violation, serialise_schema, validate_value
from ..extract.parser import extract_payload
from ..llm import BaseLLM

ANNOTATION_DIRECTIVE = (
    "Respond with a single JSON object whose keys are annotation field names. "
    "Use only fields declared in the JSON Schema. Omit fields you cannot infer."
)


def build_inference_prompt(unit: ContentUnit, task_prompt: str, schema_text: str) -> str:
    return "\n\n".join([
        task_prompt.strip(),
        ANNOTATION_DIRECTIVE,
        "JSON Schema:\n" + schema_text,
        "Text:\n" + unit.text,
    ])


def check_annotations(annotations: Any, schema: ExtractionSchema) -> Dict[str, Any]:
    if not isinstance(annotations, dict):
        raise AnnotationError("annotation output must be a JSON object")
    violations: List[Violation] = []
    for key, value in annotations.items():
        spec = schema.properties.get(key)
        if spec is None:
            violations.append(Violation(path=key, message="undeclared annotation field"))
        else:
            validate_value(value, spec, key, violations)
    if violations:
        detail = "; ".join(str(v) for v in violations)
        raise AnnotationError(f"invalid annotations: {detail}", violations)
    return annotations


async def infer_semantics(unit: ContentUnit, task_prompt: str, llm: BaseLLM,
                          schema: ExtractionSchema) -> Dict[str, Any]:
    """fixture 键为单元 ID"""
    prompt = build_inference_prompt(unit, task_prompt, serialise_schema(schema))
    raw = await llm.generate_response(prompt, key=unit.id)
    try:
        payload = extract_payload(raw.text)
    except OutputParseError as e:
        raise AnnotationError(f"unit {unit.id}: unparseable annotation output: {e}") from e
    return check_annotations(payload, schema)


def apply_annotations(unit: ContentUnit, annotations: Dict[str, Any]) -> ContentUnit:
    """并入注释：entities 追加新提及，其余键只填充缺失的元数据"""
    metadata = dict(unit.metadata)
    entities = list(unit.entities)
    seen = {(e.surface, e.entity_type) for e in entities}
    for key, value in annotations.items():
        if key == "entities":
            for item in value:
                mention = EntityMention(surface=item["mention"], entity_type=item["type"])
                if (mention.surface, mention.entity_type) not in seen:
                    seen.add((mention.surface, mention.entity_type))
                    entities.append(mention.located_in(unit.text))
        elif metadata.get(key) is None:
            metadata[key] = value
    if metadata == unit.metadata and len(entities) == len(unit.entities):
        return unit
    return unit.model_copy(update={"metadata": metadata, "entities": entities})
