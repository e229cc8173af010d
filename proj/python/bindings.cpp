// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0
#include <pybind11/pybind11.h>
PYBIND11_MODULE(_todasphere, m) { m.doc() = "todasphere bindings"; }
