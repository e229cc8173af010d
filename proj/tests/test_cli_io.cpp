// Copyright 2026 The todasphere Authors
// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
