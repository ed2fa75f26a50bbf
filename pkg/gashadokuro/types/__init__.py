# SPDX-License-Identifier: BSD-3-Clause

'''
Shared constants and error types used throughout Gashadokuro.
'''

__all__ = (

)
