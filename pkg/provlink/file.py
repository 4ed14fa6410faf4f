#    Copyright 2025 provlink developers
#
#    Licensed under the Apache License, Version 2.0 (the "License");
#    you may not use this file except in compliance with the License.
#    You may obtain a copy of the License at
#
#        http://www.apache.org/licenses/LICENSE-2.0
#
#    Unless required by applicable law or agreed to in writing, software
#    distributed under the License is distributed on an "AS IS" BASIS,
#    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#    See the License for the specific language governing permissions and
#    limitations under the License.

"""File access through fsspec, so that data and checkpoints can be read from
and written to any filesystem fsspec supports."""

import threading
from pathlib import Path
from typing import IO, Any, Dict, Iterator, Optional, Tuple, Union

from fsspec.core import open as fsspec_open
from upath import UPath

from provlink.exceptions import ParseError


def open_file(
    path: Union[str, Path, UPath],
    mode: str = "r",
    options: Optional[Dict[str, Any]] = None,
) -> IO:
    """Open a file with fsspec. Text modes use utf-8 and unix newlines.

    Parameters
    ----------
    path: Union[str, Path, UPath]
        Path or url to file.
    mode: str = "r"
        Mode to open file in.
    options: Optional[Dict[str, Any]] = None
        Options to pass to filesystem when opening file.

    Returns
    ----------
    IO
        Opened file, to be used as context manager.
    """
    kwargs = dict(options or {})
    if "b" not in mode:
        kwargs.setdefault("encoding", "utf-8")
        kwargs.setdefault("newline", "\n")
    return fsspec_open(str(path), mode, **kwargs)  # type: ignore


class LineFile:
    """Line oriented reader for data files. Yields lines together with their
    1-based line number so that parse errors can point at the offending
    line."""

    def __init__(
        self,
        path: Union[str, Path, UPath],
        options: Optional[Dict[str, Any]] = None,
    ):
        """Open a line oriented data file for reading.

        Parameters
        ----------
        path: Union[str, Path, UPath]
            Path to file.
        options: Optional[Dict[str, Any]] = None
            Options to pass to filesystem when opening file.
        """
        self._path = path
        self._file = open_file(path, "rb", options).open()
        self._lock = threading.Lock()

    @property
    def path(self) -> Union[str, Path, UPath]:
        """Return the path of the file."""
        return self._path

    def lines(self) -> Iterator[Tuple[int, str]]:
        """Return iterator of line number and line content without line
        ending. Is thread safe per line."""
        line_number = 0
        while True:
            with self._lock:
                line = self._file.readline()
            if line == b"":
                return
            line_number += 1
            try:
                text = line.decode("utf-8")
            except UnicodeDecodeError:
                raise ParseError(self._path, line_number, "invalid utf-8")
            yield line_number, text.rstrip("\r\n")

    def close(self) -> None:
        """Close the file."""
        self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
