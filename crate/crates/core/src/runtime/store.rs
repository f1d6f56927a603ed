//! The entity store and the generic entity manager operating on it.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use super::value::{ObjectId, Value};
use crate::model::{AttrType, EntitySchema, Multiplicity, Schema};
use crate::ocl::CmpOp;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("`{entity}` has no attribute `{attribute}`")]
    UnknownAttribute { entity: String, attribute: String },
    #[error("`{entity}` has no association `{association}`")]
    UnknownAssociation { entity: String, association: String },
    #[error("unknown object {0}")]
    UnknownObject(ObjectId),
    #[error("cannot store {value} in `{entity}.{feature}`")]
    TypeMismatch {
        entity: String,
        feature: String,
        value: String,
    },
    #[error("association `{entity}.{association}` has multiplicity {expected}")]
    Multiplicity {
        entity: String,
        association: String,
        expected: &'static str,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Link {
    One(Option<ObjectId>),
    Many(Vec<ObjectId>),
}

impl Link {
    pub fn contains(&self, id: ObjectId) -> bool {
        match self {
            Link::One(t) => *t == Some(id),
            Link::Many(ts) => ts.contains(&id),
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            Link::One(Some(id)) => Value::Object(*id),
            Link::One(None) => Value::Undefined,
            Link::Many(ids) => Value::Set(ids.clone()),
        }
    }
}

/// One object: attribute values and links, both in declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectRecord {
    pub id: ObjectId,
    pub entity: usize,
    pub attributes: Vec<Value>,
    pub links: Vec<Link>,
}

/// A find criterion `it.feature op value` over an attribute or a
/// single-valued association end.
#[derive(Clone, Debug, PartialEq)]
pub struct Criterion {
    pub feature: String,
    pub op: CmpOp,
    pub value: Value,
}

impl Criterion {
    pub fn new(feature: &str, op: CmpOp, value: Value) -> Self {
        Criterion {
            feature: feature.to_string(),
            op,
            value,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntityStore {
    schema: Arc<Schema>,
    extents: Vec<Vec<ObjectId>>,
    objects: BTreeMap<ObjectId, ObjectRecord>,
    next_id: u64,
}

pub fn default_value(ty: &AttrType, schema: &Schema) -> Value {
    match ty {
        AttrType::Integer => Value::Int(0),
        AttrType::Real => Value::Real(0.0),
        AttrType::Boolean => Value::Bool(false),
        AttrType::String => Value::Str(String::new()),
        AttrType::Date => Value::Date(0),
        AttrType::Enum(e) => {
            let first = schema
                .enum_decl(e)
                .and_then(|d| d.literals.first())
                .cloned()
                .unwrap_or_default();
            Value::Enum {
                ty: e.clone(),
                literal: first,
            }
        }
    }
}

/// Converts `value` to the attribute's representation, or `None` if it
/// does not fit.
pub fn coerce(ty: &AttrType, value: Value, schema: &Schema) -> Option<Value> {
    Some(match (ty, value) {
        (AttrType::Integer, Value::Int(n)) => Value::Int(n),
        (AttrType::Real, Value::Real(x)) => Value::Real(x),
        (AttrType::Real, Value::Int(n)) => Value::Real(n as f64),
        (AttrType::Boolean, Value::Bool(b)) => Value::Bool(b),
        (AttrType::String, Value::Str(s)) => Value::Str(s),
        (AttrType::Date, Value::Date(d) | Value::Int(d)) => Value::Date(d),
        (AttrType::Enum(e), Value::Enum { ty, literal }) if *e == ty => {
            let ok = schema
                .enum_decl(e)
                .is_some_and(|d| d.literals.contains(&literal));
            if !ok {
                return None;
            }
            Value::Enum { ty, literal }
        }
        _ => return None,
    })
}

impl EntityStore {
    pub fn new(schema: Arc<Schema>) -> Self {
        let extents = vec![Vec::new(); schema.entities.len()];
        EntityStore {
            schema,
            extents,
            objects: BTreeMap::new(),
            next_id: 1,
        }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub(crate) fn set_next_id(&mut self, n: u64) {
        self.next_id = n;
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        self.objects.contains_key(&id)
    }

    pub fn get(&self, id: ObjectId) -> Option<&ObjectRecord> {
        self.objects.get(&id)
    }

    pub fn entity_of(&self, id: ObjectId) -> Option<&EntitySchema> {
        self.get(id).map(|r| &self.schema.entities[r.entity])
    }

    fn entity_idx(&self, entity: &str) -> Result<usize, StoreError> {
        self.schema
            .entity_index(entity)
            .ok_or_else(|| StoreError::UnknownEntity(entity.to_string()))
    }

    /// Objects of `entity` in insertion order.
    pub fn all_instances(&self, entity: &str) -> Result<&[ObjectId], StoreError> {
        Ok(&self.extents[self.entity_idx(entity)?])
    }

    pub fn extent(&self, entity_index: usize) -> &[ObjectId] {
        &self.extents[entity_index]
    }

    /// Every object, entity by entity in schema order, then extent order.
    pub fn iter(&self) -> impl Iterator<Item = &ObjectRecord> {
        self.extents
            .iter()
            .flat_map(move |ext| ext.iter().map(move |id| &self.objects[id]))
    }

    fn record(&self, id: ObjectId) -> Result<&ObjectRecord, StoreError> {
        self.objects.get(&id).ok_or(StoreError::UnknownObject(id))
    }

    fn record_mut(&mut self, id: ObjectId) -> Result<&mut ObjectRecord, StoreError> {
        self.objects
            .get_mut(&id)
            .ok_or(StoreError::UnknownObject(id))
    }

    fn attr_index(&self, id: ObjectId, name: &str) -> Result<(usize, usize), StoreError> {
        let rec = self.record(id)?;
        let es = &self.schema.entities[rec.entity];
        es.attribute(name)
            .map(|(i, _)| (rec.entity, i))
            .ok_or_else(|| StoreError::UnknownAttribute {
                entity: es.name.clone(),
                attribute: name.to_string(),
            })
    }

    fn assoc_index(&self, id: ObjectId, name: &str) -> Result<(usize, usize), StoreError> {
        let rec = self.record(id)?;
        let es = &self.schema.entities[rec.entity];
        es.association(name)
            .map(|(i, _)| (rec.entity, i))
            .ok_or_else(|| StoreError::UnknownAssociation {
                entity: es.name.clone(),
                association: name.to_string(),
            })
    }

    pub fn attribute(&self, id: ObjectId, name: &str) -> Result<&Value, StoreError> {
        let (_, i) = self.attr_index(id, name)?;
        Ok(&self.objects[&id].attributes[i])
    }

    pub fn link(&self, id: ObjectId, name: &str) -> Result<&Link, StoreError> {
        let (_, i) = self.assoc_index(id, name)?;
        Ok(&self.objects[&id].links[i])
    }

    /// Creates an object with default attributes and empty links and
    /// appends it to its extent.
    pub fn create_object(&mut self, entity: &str) -> Result<ObjectId, StoreError> {
        let e = self.entity_idx(entity)?;
        let id = ObjectId(self.next_id);
        self.next_id += 1;
        let es = &self.schema.entities[e];
        let attributes = es
            .attributes
            .iter()
            .map(|(_, t)| default_value(t, &self.schema))
            .collect();
        let links = es
            .associations
            .iter()
            .map(|a| match a.multiplicity {
                Multiplicity::One => Link::One(None),
                Multiplicity::Many => Link::Many(Vec::new()),
            })
            .collect();
        self.objects.insert(
            id,
            ObjectRecord {
                id,
                entity: e,
                attributes,
                links,
            },
        );
        self.extents[e].push(id);
        Ok(id)
    }

    /// Inserts a fully formed record, used by the loader. The caller keeps
    /// `next_id` consistent.
    pub(crate) fn insert_record(&mut self, rec: ObjectRecord) {
        self.extents[rec.entity].push(rec.id);
        self.objects.insert(rec.id, rec);
    }

    fn matches(&self, rec: &ObjectRecord, criteria: &[Criterion]) -> Result<bool, StoreError> {
        let es = &self.schema.entities[rec.entity];
        for c in criteria {
            let actual = if let Some((i, _)) = es.attribute(&c.feature) {
                rec.attributes[i].clone()
            } else if let Some((i, a)) = es.association(&c.feature) {
                if a.multiplicity == Multiplicity::Many {
                    return Err(StoreError::Multiplicity {
                        entity: es.name.clone(),
                        association: c.feature.clone(),
                        expected: "one",
                    });
                }
                rec.links[i].to_value()
            } else {
                return Err(StoreError::UnknownAttribute {
                    entity: es.name.clone(),
                    attribute: c.feature.clone(),
                });
            };
            if actual.compare(c.op, &c.value) != Some(true) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// First object in insertion order meeting every criterion.
    pub fn find_object_where(
        &self,
        entity: &str,
        criteria: &[Criterion],
    ) -> Result<Option<ObjectId>, StoreError> {
        for id in self.all_instances(entity)? {
            if self.matches(&self.objects[id], criteria)? {
                return Ok(Some(*id));
            }
        }
        Ok(None)
    }

    /// All objects meeting every criterion, in insertion order.
    pub fn find_objects_where(
        &self,
        entity: &str,
        criteria: &[Criterion],
    ) -> Result<Vec<ObjectId>, StoreError> {
        let mut out = Vec::new();
        for id in self.all_instances(entity)? {
            if self.matches(&self.objects[id], criteria)? {
                out.push(*id);
            }
        }
        Ok(out)
    }

    pub fn find_object(
        &self,
        entity: &str,
        attribute: &str,
        op: CmpOp,
        value: &Value,
    ) -> Result<Option<ObjectId>, StoreError> {
        self.find_object_where(entity, &[Criterion::new(attribute, op, value.clone())])
    }

    pub fn find_objects(
        &self,
        entity: &str,
        attribute: &str,
        op: CmpOp,
        value: &Value,
    ) -> Result<Vec<ObjectId>, StoreError> {
        self.find_objects_where(entity, &[Criterion::new(attribute, op, value.clone())])
    }

    /// Removes the object and clears every link pointing at it.
    pub fn release_object(&mut self, id: ObjectId) -> Result<(), StoreError> {
        let rec = self
            .objects
            .remove(&id)
            .ok_or(StoreError::UnknownObject(id))?;
        self.extents[rec.entity].retain(|x| *x != id);
        for other in self.objects.values_mut() {
            for link in &mut other.links {
                match link {
                    Link::One(t) if *t == Some(id) => *t = None,
                    Link::Many(ts) => ts.retain(|x| *x != id),
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn set_attribute(
        &mut self,
        id: ObjectId,
        name: &str,
        value: Value,
    ) -> Result<(), StoreError> {
        let (e, i) = self.attr_index(id, name)?;
        let ty = &self.schema.entities[e].attributes[i].1;
        let shown = value.to_string();
        let v = coerce(ty, value, &self.schema).ok_or_else(|| StoreError::TypeMismatch {
            entity: self.schema.entities[e].name.clone(),
            feature: name.to_string(),
            value: shown,
        })?;
        self.record_mut(id)?.attributes[i] = v;
        Ok(())
    }

    fn check_target(&self, e: usize, assoc: usize, target: ObjectId) -> Result<(), StoreError> {
        let end = &self.schema.entities[e].associations[assoc];
        let rec = self.record(target)?;
        if self.schema.entities[rec.entity].name != end.target {
            return Err(StoreError::TypeMismatch {
                entity: self.schema.entities[e].name.clone(),
                feature: end.name.clone(),
                value: format!("{target} ({})", self.schema.entities[rec.entity].name),
            });
        }
        Ok(())
    }

    fn mult_error(&self, e: usize, assoc: usize, expected: &'static str) -> StoreError {
        StoreError::Multiplicity {
            entity: self.schema.entities[e].name.clone(),
            association: self.schema.entities[e].associations[assoc].name.clone(),
            expected,
        }
    }

    /// Sets a single-valued end. When the inverse end is also single-valued
    /// it is kept consistent; other inverses are left to the caller.
    pub fn set_link_one(
        &mut self,
        id: ObjectId,
        name: &str,
        target: Option<ObjectId>,
    ) -> Result<(), StoreError> {
        let (e, a) = self.assoc_index(id, name)?;
        let end = self.schema.entities[e].associations[a].clone();
        if end.multiplicity != Multiplicity::One {
            return Err(self.mult_error(e, a, "many"));
        }
        if let Some(t) = target {
            self.check_target(e, a, t)?;
        }
        let Link::One(old) = self.objects[&id].links[a] else {
            unreachable!("link shape follows the schema")
        };
        self.record_mut(id)?.links[a] = Link::One(target);

        let inverse = end.inverse.as_deref().and_then(|inv| {
            let te = self.schema.entity_index(&end.target)?;
            let (ti, iend) = self.schema.entities[te].association(inv)?;
            (iend.multiplicity == Multiplicity::One).then_some(ti)
        });
        let Some(ti) = inverse else {
            return Ok(());
        };
        if let Some(o) = old.filter(|o| Some(*o) != target) {
            if let Some(r) = self.objects.get_mut(&o) {
                if r.links[ti] == Link::One(Some(id)) {
                    r.links[ti] = Link::One(None);
                }
            }
        }
        if let Some(t) = target {
            let Link::One(prev) = self.objects[&t].links[ti] else {
                unreachable!("link shape follows the schema")
            };
            if let Some(p) = prev.filter(|p| *p != id) {
                if let Some(r) = self.objects.get_mut(&p) {
                    if r.links[a] == Link::One(Some(t)) {
                        r.links[a] = Link::One(None);
                    }
                }
            }
            self.record_mut(t)?.links[ti] = Link::One(Some(id));
        }
        Ok(())
    }

    /// Adds `target` to a many-valued end (set semantics).
    pub fn add_link(
        &mut self,
        id: ObjectId,
        name: &str,
        target: ObjectId,
    ) -> Result<(), StoreError> {
        let (e, a) = self.assoc_index(id, name)?;
        self.check_target(e, a, target)?;
        match &mut self.record_mut(id)?.links[a] {
            Link::Many(ts) => {
                if !ts.contains(&target) {
                    ts.push(target);
                }
                Ok(())
            }
            Link::One(_) => Err(self.mult_error(e, a, "one")),
        }
    }

    pub fn remove_link(
        &mut self,
        id: ObjectId,
        name: &str,
        target: ObjectId,
    ) -> Result<(), StoreError> {
        let (e, a) = self.assoc_index(id, name)?;
        match &mut self.record_mut(id)?.links[a] {
            Link::Many(ts) => {
                ts.retain(|x| *x != target);
                Ok(())
            }
            Link::One(_) => Err(self.mult_error(e, a, "one")),
        }
    }

    /// Sweeps the whole store: extents, link targets, link shapes and
    /// one-to-one inverse consistency. Returns every violation found.
    pub fn check_integrity(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = 0;
        for (e, ext) in self.extents.iter().enumerate() {
            for id in ext {
                seen += 1;
                match self.objects.get(id) {
                    Some(r) if r.entity == e => {}
                    _ => out.push(format!("extent entry {id} has no matching record")),
                }
                if id.0 >= self.next_id {
                    out.push(format!("{id} is not below next_id {}", self.next_id));
                }
            }
        }
        if seen != self.objects.len() {
            out.push("objects missing from extents".to_string());
        }
        for rec in self.objects.values() {
            let es = &self.schema.entities[rec.entity];
            if rec.attributes.len() != es.attributes.len() {
                out.push(format!("{} has the wrong attribute count", rec.id));
            }
            for (a, link) in es.associations.iter().zip(&rec.links) {
                let targets: Vec<ObjectId> = match (a.multiplicity, link) {
                    (Multiplicity::One, Link::One(t)) => t.iter().copied().collect(),
                    (Multiplicity::Many, Link::Many(ts)) => ts.clone(),
                    _ => {
                        out.push(format!("{}.{} has the wrong shape", rec.id, a.name));
                        continue;
                    }
                };
                for t in targets {
                    match self.entity_of(t) {
                        None => out.push(format!("{}.{} dangles at {t}", rec.id, a.name)),
                        Some(te) if te.name != a.target => {
                            out.push(format!("{}.{} points at a {}", rec.id, a.name, te.name))
                        }
                        Some(te) => {
                            let inv = a.inverse.as_deref().and_then(|n| te.association(n));
                            if let (Multiplicity::One, Some((ti, iend))) = (a.multiplicity, inv) {
                                if iend.multiplicity == Multiplicity::One
                                    && self.objects[&t].links[ti] != Link::One(Some(rec.id))
                                {
                                    out.push(format!(
                                        "{}.{} = {t} but {t}.{} does not point back",
                                        rec.id, a.name, iend.name
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    fn store() -> EntityStore {
        let m = parse_model(
            "enum St { A, B }
             entity P { N : Integer; S : St; Card : C[1] inverse Holder[1]; Loans : L[*] inverse Who[1]; }
             entity C { K : Integer; }
             entity L { Due : Date; }",
            "t.rm",
        )
        .unwrap();
        EntityStore::new(Arc::new(Schema::from_model(&m).0))
    }

    #[test]
    fn ids_are_monotonic_and_never_reused() {
        let mut s = store();
        let a = s.create_object("L").unwrap();
        let b = s.create_object("L").unwrap();
        assert_eq!((a, b), (ObjectId(1), ObjectId(2)));
        assert_eq!(s.all_instances("L").unwrap(), &[a, b]);
        s.release_object(b).unwrap();
        let c = s.create_object("L").unwrap();
        assert!(c != a && c != b);
        assert_eq!(
            s.create_object("Nope"),
            Err(StoreError::UnknownEntity("Nope".into()))
        );
    }

    #[test]
    fn defaults() {
        let mut s = store();
        let p = s.create_object("P").unwrap();
        assert_eq!(s.attribute(p, "N").unwrap(), &Value::Int(0));
        assert_eq!(s.attribute(p, "S").unwrap(), &Value::enum_lit("St", "A"));
        assert_eq!(s.link(p, "Card").unwrap(), &Link::One(None));
    }

    #[test]
    fn find_first_in_insertion_order() {
        let mut s = store();
        for due in [50, 150, 80] {
            let l = s.create_object("L").unwrap();
            s.set_attribute(l, "Due", Value::Date(due)).unwrap();
        }
        let hit = s
            .find_object("L", "Due", CmpOp::Lt, &Value::Int(100))
            .unwrap();
        assert_eq!(hit, Some(ObjectId(1)));
        let all = s
            .find_objects("L", "Due", CmpOp::Lt, &Value::Int(100))
            .unwrap();
        assert_eq!(all, vec![ObjectId(1), ObjectId(3)]);
        assert_eq!(
            s.find_object("C", "K", CmpOp::Eq, &Value::Int(1)).unwrap(),
            None
        );
    }

    #[test]
    fn release_clears_inbound_links() {
        let mut s = store();
        let p = s.create_object("P").unwrap();
        let ls: Vec<_> = (0..3).map(|_| s.create_object("L").unwrap()).collect();
        for l in &ls {
            s.add_link(p, "Loans", *l).unwrap();
            s.set_link_one(*l, "Who", Some(p)).unwrap();
        }
        s.release_object(ls[1]).unwrap();
        assert_eq!(s.link(p, "Loans").unwrap(), &Link::Many(vec![ls[0], ls[2]]));
        assert!(s.check_integrity().is_empty());
        assert_eq!(
            s.release_object(ls[1]),
            Err(StoreError::UnknownObject(ls[1]))
        );
    }

    #[test]
    fn one_to_one_inverse_is_maintained() {
        let mut s = store();
        let p1 = s.create_object("P").unwrap();
        let p2 = s.create_object("P").unwrap();
        let c = s.create_object("C").unwrap();
        s.set_link_one(p1, "Card", Some(c)).unwrap();
        assert_eq!(s.link(c, "Holder").unwrap(), &Link::One(Some(p1)));
        s.set_link_one(p2, "Card", Some(c)).unwrap();
        assert_eq!(s.link(p1, "Card").unwrap(), &Link::One(None));
        assert_eq!(s.link(c, "Holder").unwrap(), &Link::One(Some(p2)));
        s.set_link_one(c, "Holder", None).unwrap();
        assert_eq!(s.link(p2, "Card").unwrap(), &Link::One(None));
        assert!(s.check_integrity().is_empty());
    }

    #[test]
    fn attribute_coercion() {
        let mut s = store();
        let p = s.create_object("P").unwrap();
        assert!(s.set_attribute(p, "N", Value::Str("x".into())).is_err());
        assert!(s.set_attribute(p, "S", Value::enum_lit("St", "Z")).is_err());
        s.set_attribute(p, "S", Value::enum_lit("St", "B")).unwrap();
    }
}
