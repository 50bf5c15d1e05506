# -*- coding: utf-8 -*-
import json
from json import JSONEncoder

import numpy as np


class CustomJSONEncoder(JSONEncoder):
    """ 处理numpy标量和数组，直接dumps会报不可序列化 """

    def default(self, obj):
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):  # 枚举
            return obj.value
        return super().default(obj)


class JsonUtil:
    """ 处理json事件，统一排序key，保证同样的数据序列化出同样的字节 """

    @classmethod
    def dump(cls, obj, fp, *args, **kwargs):
        kwargs.setdefault("ensure_ascii", False)
        kwargs.setdefault("sort_keys", True)
        kwargs.setdefault("indent", 2)
        return json.dump(obj, fp, cls=CustomJSONEncoder, *args, **kwargs)

    @classmethod
    def dumps(cls, obj, *args, **kwargs):
        kwargs.setdefault("ensure_ascii", False)
        kwargs.setdefault("sort_keys", True)
        return json.dumps(obj, cls=CustomJSONEncoder, *args, **kwargs)

    @classmethod
    def loads(cls, obj, *args, **kwargs):
        return json.loads(obj, *args, **kwargs)

    @classmethod
    def load(cls, fp, *args, **kwargs):
        return json.load(fp, *args, **kwargs)

    @classmethod
    def append_line(cls, path, obj):
        """ 追加一行到 JSON lines 文件 """
        with open(path, "a", encoding="utf-8", newline="\n") as fp:
            fp.write(cls.dumps(obj) + "\n")

    @classmethod
    def read_lines(cls, path):
        with open(path, "r", encoding="utf-8") as fp:
            return [cls.loads(line) for line in fp if line.strip()]
