# -*- coding: utf-8 -*-
import hashlib
import io
import os

from utils.util.json_util import JsonUtil


class FileUtil:

    @classmethod
    def check_dir(cls, *paths):
        """ 校验路径是否存在，若不存在则创建 """
        for path in paths:
            if path and not os.path.exists(path):
                os.makedirs(path)

    @classmethod
    def save_json(cls, path, content):
        with io.open(path, "w", encoding="utf-8", newline="\n") as fp:
            JsonUtil.dump(content, fp)
            fp.write("\n")

    @classmethod
    def load_json(cls, path):
        with io.open(path, "r", encoding="utf-8") as fp:
            return JsonUtil.load(fp)

    @classmethod
    def save_bytes(cls, path, content: bytes):
        with open(path, "wb") as fp:
            fp.write(content)

    @classmethod
    def read_bytes(cls, path) -> bytes:
        with open(path, "rb") as fp:
            return fp.read()

    @classmethod
    def sha256(cls, path):
        return hashlib.sha256(cls.read_bytes(path)).hexdigest()

    @classmethod
    def delete_file(cls, file_path):
        if os.path.exists(file_path):
            os.remove(file_path)
