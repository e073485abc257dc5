# SPDX-FileCopyrightText: (C) 2026 rowdrive contributors
# SPDX-License-Identifier: Apache-2.0
