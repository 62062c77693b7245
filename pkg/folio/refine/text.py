"""页内文本校正：行尾连字符还原与排版规范化"""

import re
from typing import Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

DEFAULT_QUOTE_MAP: Dict[str, str] = {
    "“": '"', "”": '"', "„": '"', "‟": '"',
    "‘": "'", "’": "'", "‚": "'", "‛": "'",
}

_SPACE_RUN = re.compile(r"[ \t]+")
_TRAILING = re.compile(r"[ \t]+$", re.M)


def dehyphenate(text: str) -> str:
    """
    合并换行。

    行尾为 '-' 且下一行以小写字母开头：去掉连字符直接拼接；
    下一行以其他字符开头（大写、数字等）：保留连字符直接拼接；
    行尾不是 '-'：以单个空格拼接。
    """
    lines = text.split("\n")
    out = prev = lines[0]
    for line in lines[1:]:
        if prev.endswith("-"):
            out = out[:-1] + line if line[:1].islower() else out + line
        else:
            out = out + " " + line
        prev = line
    return out


class TypographyRules(BaseModel):
    """排版规范化规则"""
    model_config = ConfigDict(frozen=True)

    quote_map: Dict[str, str] = Field(default_factory=lambda: dict(DEFAULT_QUOTE_MAP),
                                      description="单字符 -> 替换文本；书名号 « » 默认保留")
    collapse_whitespace: bool = Field(True, description="空格/制表符连续出现时合并为一个空格")
    strip_trailing: bool = Field(True, description="去除每行行尾空白")

    @field_validator("quote_map")
    @classmethod
    def _check_map(cls, mapping):
        bad = [k for k in mapping if len(k) != 1]
        if bad:
            raise ValueError(f"quote_map keys must be single characters: {bad}")
        return mapping

    @model_validator(mode="after")
    def _check_closed(self):
        # 替换结果中不能再出现被替换字符，否则两次应用结果不同
        produced = set("".join(self.quote_map.values()))
        clash = sorted(produced & set(self.quote_map))
        if clash:
            raise ValueError(f"quote_map output re-enters the map: {clash}")
        return self

    def table(self) -> Dict[int, str]:
        return str.maketrans(self.quote_map)


DEFAULT_RULES = TypographyRules()


def normalise_typography(text: str, rules: Optional[TypographyRules] = None) -> str:
    """统一引号、合并空白、去除行尾空格。幂等。"""
    rules = rules or DEFAULT_RULES
    text = text.translate(rules.table())
    if rules.collapse_whitespace:
        text = _SPACE_RUN.sub(" ", text)
    if rules.strip_trailing:
        text = _TRAILING.sub("", text)
    return text
