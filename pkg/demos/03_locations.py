"""
Extracting anatomical locations with ranked patterns
====================================================

Each rule maps a regular expression over stemmed text to a location concept.
When a match lies inside a longer match, the more specific one wins.
"""

from radtag.locextract import attach_locations, default_rules, extract_locations, find_matches

rules = default_rules()
print(len(rules), "rules")

sentence = "pinzamient sen costofren derech"
for match in find_matches(sentence, rules):
    print(match)
print(extract_locations(sentence, rules))

# Several independent locations come back in reading order.
print(extract_locations("derram pleural izq", rules))
print(extract_locations("sign fibrosis bibasal", rules))

# Labels for a sentence are followed by its locations, each prefixed with "loc".
print(attach_locations(["pulmonary fibrosis"], "sign fibrosis bibasal", rules))
