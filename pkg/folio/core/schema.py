"""
抽取模式引擎。

只支持示例模式用到的 JSON Schema 子集：type / properties / items / enum / required。
其他关键字（$ref、oneOf、pattern、format 等）一律抛出 UnsupportedConstructError，
不做部分支持，因此不使用通用的 jsonschema 校验器。
校验结果以 Violation 列表返回，收集全部问题，路径形如 entities[0].type。
"""

import json
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import SchemaError, UnsupportedConstructError

SUPPORTED_KEYS = ("type", "properties", "items", "enum", "required")
SUPPORTED_TYPES = ("object", "array", "string", "integer")


class FieldSpec(BaseModel):
    """单个字段的约束"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["object", "array", "string", "integer"]
    enum_values: Optional[List[str]] = Field(None, description="封闭取值集合（仅 string）")
    item_spec: Optional["FieldSpec"] = Field(None, description="数组元素约束")
    nested: Optional[Dict[str, "FieldSpec"]] = Field(None, description="对象属性约束")
    nested_required: List[str] = Field(default_factory=list, description="对象必填属性")

    @model_validator(mode="after")
    def _check(self):
        if self.enum_values is not None and not self.enum_values:
            raise ValueError("enum_values must be non-empty when present")
        return self


FieldSpec.model_rebuild()


class ExtractionSchema(BaseModel):
    """解析后的用户抽取模式（根节点必为 object）"""
    model_config = ConfigDict(frozen=True)

    properties: Dict[str, FieldSpec] = Field(default_factory=dict)
    required: List[str] = Field(default_factory=list, description="必填字段，保持文档顺序")

    @model_validator(mode="after")
    def _check_required(self):
        missing = [name for name in self.required if name not in self.properties]
        if missing:
            raise ValueError(f"required name absent from properties: {missing}")
        return self

    def declares(self, name: str) -> bool:
        return name in self.properties


class Violation(BaseModel):
    """一条校验违规，path 为空串表示根节点"""
    model_config = ConfigDict(frozen=True)

    path: str
    message: str

    def __str__(self):
        return f"{self.path or '<root>'}: {self.message}"


# ---------------------------------------------------------------- parsing

def _join(path: str, name: str) -> str:
    return f"{path}.{name}" if path else name


def _parse_required(node: Dict[str, Any], properties: Dict[str, FieldSpec], path: str) -> List[str]:
    required = node.get("required", [])
    if not isinstance(required, list) or not all(isinstance(r, str) for r in required):
        raise SchemaError(f"'required' must be a list of strings (at '{path or '<root>'}')")
    absent = [r for r in required if r not in properties]
    if absent:
        raise SchemaError(f"required name absent from properties: {absent} (at '{path or '<root>'}')")
    return list(dict.fromkeys(required))


def _parse_node(node: Any, path: str) -> FieldSpec:
    if not isinstance(node, dict):
        raise SchemaError(f"schema node must be an object (at '{path or '<root>'}')")
    for key in node:
        if key not in SUPPORTED_KEYS:
            raise UnsupportedConstructError(key, path)
    if "type" not in node:
        raise SchemaError(f"schema node lacks 'type' (at '{path or '<root>'}')")
    kind = node["type"]
    if kind not in SUPPORTED_TYPES:
        raise UnsupportedConstructError(f"type: {kind}", path)

    if "enum" in node and kind != "string":
        raise UnsupportedConstructError(f"enum on {kind}", path)
    if "items" in node and kind != "array":
        raise UnsupportedConstructError(f"items on {kind}", path)
    for key in ("properties", "required"):
        if key in node and kind != "object":
            raise UnsupportedConstructError(f"{key} on {kind}", path)

    enum_values = None
    if "enum" in node:
        enum_values = node["enum"]
        if not isinstance(enum_values, list) or not enum_values or \
                not all(isinstance(v, str) for v in enum_values):
            raise SchemaError(f"'enum' must be a non-empty list of strings (at '{path}')")

    item_spec = _parse_node(node["items"], f"{path}[]") if "items" in node else None

    nested = None
    nested_required: List[str] = []
    if kind == "object":
        props = node.get("properties", {})
        if not isinstance(props, dict):
            raise SchemaError(f"'properties' must be an object (at '{path or '<root>'}')")
        nested = {name: _parse_node(sub, _join(path, name)) for name, sub in props.items()}
        nested_required = _parse_required(node, nested, path)

    return FieldSpec(kind=kind, enum_values=enum_values, item_spec=item_spec,
                     nested=nested, nested_required=nested_required)


def parse_schema(text: str) -> ExtractionSchema:
    """解析模式文档（JSON 文本）为 ExtractionSchema。

    Raises:
        SchemaError: 文档格式错误、必填名不在 properties 中、根节点不是 object
        UnsupportedConstructError: 使用了子集以外的构造
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"malformed schema document: {e}") from e
    root = _parse_node(document, "")
    if root.kind != "object":
        raise SchemaError(f"schema root must have type 'object', got '{root.kind}'")
    return ExtractionSchema(properties=root.nested or {}, required=root.nested_required)


def _node_to_dict(spec: FieldSpec) -> Dict[str, Any]:
    node: Dict[str, Any] = {"type": spec.kind}
    if spec.enum_values is not None:
        node["enum"] = list(spec.enum_values)
    if spec.item_spec is not None:
        node["items"] = _node_to_dict(spec.item_spec)
    if spec.nested is not None:
        node["properties"] = {name: _node_to_dict(sub) for name, sub in spec.nested.items()}
        if spec.nested_required:
            node["required"] = list(spec.nested_required)
    return node


def schema_to_dict(schema: ExtractionSchema) -> Dict[str, Any]:
    root = FieldSpec(kind="object", nested=dict(schema.properties), nested_required=list(schema.required))
    return _node_to_dict(root)


def serialise_schema(schema: ExtractionSchema) -> str:
    """紧凑 JSON 表示（单行，非 ASCII 原样输出），可被 parse_schema 重新解析。"""
    return json.dumps(schema_to_dict(schema), ensure_ascii=False)


# ---------------------------------------------------------------- validation

_PY_TYPES = {"object": "object", "array": "array", "string": "string", "integer": "integer"}


def _describe(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "number"
    if isinstance(value, str):
        return "string"
    if isinstance(value, list):
        return "array"
    if isinstance(value, dict):
        return "object"
    return type(value).__name__


def _kind_matches(value: Any, kind: str) -> bool:
    if kind == "object":
        return isinstance(value, dict)
    if kind == "array":
        return isinstance(value, list)
    if kind == "string":
        return isinstance(value, str)
    return isinstance(value, int) and not isinstance(value, bool)


def _check_object(obj: Dict[str, Any], properties: Dict[str, FieldSpec],
                  required: List[str], path: str, out: List[Violation]) -> None:
    for name in required:
        if name not in obj:
            out.append(Violation(path=path, message=f"missing required field '{name}'"))
    for name, value in obj.items():
        child = _join(path, name)
        spec = properties.get(name)
        if spec is None:
            out.append(Violation(path=child, message="undeclared field"))
        else:
            validate_value(value, spec, child, out)


def validate_value(value: Any, spec: FieldSpec, path: str, out: List[Violation]) -> List[Violation]:
    """按 spec 校验单个值，违规追加到 out 并返回 out。"""
    if not _kind_matches(value, spec.kind):
        out.append(Violation(path=path, message=f"expected {_PY_TYPES[spec.kind]}, got {_describe(value)}"))
        return out
    if spec.enum_values is not None and value not in spec.enum_values:
        out.append(Violation(path=path, message=f"value {value!r} not in enum {spec.enum_values}"))
    if spec.kind == "array" and spec.item_spec is not None:
        for i, item in enumerate(value):
            validate_value(item, spec.item_spec, f"{path}[{i}]", out)
    if spec.kind == "object" and spec.nested is not None:
        _check_object(value, spec.nested, spec.nested_required, path, out)
    return out


def validate(instance: Any, schema: ExtractionSchema) -> List[Violation]:
    """校验实例，返回全部违规（空列表表示通过）。纯函数。"""
    out: List[Violation] = []
    if not isinstance(instance, dict):
        out.append(Violation(path="", message=f"expected object, got {_describe(instance)}"))
        return out
    _check_object(instance, schema.properties, schema.required, "", out)
    return out


def load_schema(path) -> ExtractionSchema:
    """从 UTF-8 文件读取并解析模式"""
    with open(path, "r", encoding="utf-8") as f:
        return parse_schema(f.read())
