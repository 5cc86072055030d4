#!/usr/bin/env python3
"""
===============================================================================
錯誤類型 / Error Types
===============================================================================
整個專案共用的例外。CLI 依類型對應退出碼：
  NumericFault / CheckFailure → 1
  ConfigError / DatasetError / CheckpointError / ImageFormatError → 2
"""


class SSCError(Exception):
    """專案例外的共同基底"""


class ShapeError(SSCError, ValueError):
    """形狀或契約不符（conv 通道、損失兩邊形狀、奇數旋轉遇到非方形…）"""


class NumericFault(SSCError, FloatingPointError):
    """出現 NaN / Inf"""


class ConfigError(SSCError, ValueError):
    """設定檔解析錯誤，帶行號"""

    def __init__(self, message: str, line: int = None, path: str = None):
        self.line = line
        self.path = path
        where = ''
        if path is not None:
            where = f'{path}:'
        if line is not None:
            where = f'{where}{line}: '
        elif where:
            where = f'{where} '
        super().__init__(f'{where}{message}')


class CheckpointError(SSCError, ValueError):
    """checkpoint 檔損壞、版本不符或形狀與設定不一致"""


class DatasetError(SSCError, ValueError):
    """資料集缺檔、配對失敗、空目錄、尺寸不符"""


class ImageFormatError(SSCError, ValueError):
    """不支援的 PNG（16-bit、調色盤帶透明…）"""


class CheckFailure(SSCError, AssertionError):
    """selfcheck 有項目失敗"""
