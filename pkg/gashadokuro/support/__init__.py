# SPDX-License-Identifier: BSD-3-Clause

'''
Support infrastructure for Gashadokuro
'''

__all__ = (

)
